//! Parallel per-scan featurization.

use std::collections::HashMap;
use std::sync::RwLock;

use rayon::prelude::*;

use rainrate_core::features::{scan_features, CropBox, MonteCarloReference, MstReference, Scan, ScanFeatures};
use rainrate_core::synth::SessionPlan;

/// Uniform-reference cache shared across threads.
#[derive(Debug, Default)]
pub struct SharedReference {
    inner: MonteCarloReference,
    cache: RwLock<HashMap<usize, f64>>,
}

impl SharedReference {
    pub fn new(inner: MonteCarloReference) -> Self {
        SharedReference { inner, cache: RwLock::new(HashMap::new()) }
    }

    /// Fill the cache for every count in `2..=max_n` up front.
    pub fn precompute(&self, max_n: usize) {
        let missing: Vec<usize> = {
            let cache = self.cache.read().expect("reference cache poisoned");
            (2..=max_n).filter(|n| !cache.contains_key(n)).collect()
        };
        let values: Vec<(usize, f64)> = missing.par_iter().map(|&n| (n, self.inner.unit_length(n))).collect();
        self.cache.write().expect("reference cache poisoned").extend(values);
    }
}

impl MstReference for SharedReference {
    fn unit_length(&self, n: usize) -> f64 {
        if let Some(v) = self.cache.read().expect("reference cache poisoned").get(&n) {
            return *v;
        }
        // values are deterministic, so a racing duplicate insert is harmless
        let v = self.inner.unit_length(n);
        self.cache.write().expect("reference cache poisoned").insert(n, v);
        v
    }
}

pub fn featurize_scans(scans: &[Scan], bbox: &CropBox, reference: &SharedReference) -> Vec<ScanFeatures> {
    scans.par_iter().map(|s| scan_features(s, bbox, reference)).collect()
}

/// Featurize a synthetic session without holding all scans in memory.
pub fn featurize_plan(
    plan: &SessionPlan,
    bbox: &CropBox,
    reference: &SharedReference,
) -> (Vec<f64>, Vec<ScanFeatures>) {
    let features =
        (0..plan.frame_count()).into_par_iter().map(|i| scan_features(&plan.scan(i), bbox, reference)).collect();
    let timestamps = (0..plan.frame_count()).map(|i| plan.timestamp(i)).collect();
    (timestamps, features)
}
