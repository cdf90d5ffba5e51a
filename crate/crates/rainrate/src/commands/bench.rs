//! `bench`: inference and featurization timings.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use rainrate_core::features::{scan_features, CropBox, MstReference, Point, Scan};
use rainrate_core::math::derive_seed;
use rainrate_core::moe::MoEModel;

use crate::error::{CliError, CliResult};
use crate::featurize::SharedReference;

const BENCH_STREAM: u64 = 21;

/// Desk-scale budgets, milliseconds.
pub const INFERENCE_BUDGET_MS: f64 = 50.0;
pub const FEATURIZATION_BUDGET_MS: f64 = 2000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub reps: usize,
    pub mean_ms: f64,
    pub p95_ms: f64,
}

impl Timing {
    fn from_samples(mut ms: Vec<f64>) -> Self {
        ms.sort_by(f64::total_cmp);
        let reps = ms.len();
        let mean_ms = ms.iter().sum::<f64>() / reps as f64;
        let p95_ms = ms[(0.95 * reps as f64).ceil() as usize - 1];
        Timing { reps, mean_ms, p95_ms }
    }

    fn to_json(self) -> Value {
        json!({"reps": self.reps, "mean_ms": self.mean_ms, "p95_ms": self.p95_ms})
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub inference: Timing,
    pub featurization: Timing,
    pub points: usize,
    /// One-off cost of the uniform-reference MST length for that point count.
    pub reference_ms: f64,
}

impl BenchReport {
    pub fn within_budget(&self) -> bool {
        self.inference.mean_ms < INFERENCE_BUDGET_MS && self.featurization.mean_ms < FEATURIZATION_BUDGET_MS
    }

    pub fn to_json(&self) -> Value {
        json!({
            "inference": self.inference.to_json(),
            "featurization": {
                "points": self.points,
                "timing": self.featurization.to_json(),
                "reference_ms": self.reference_ms,
            },
            "budget_ms": {"inference_mean": INFERENCE_BUDGET_MS, "featurization_mean": FEATURIZATION_BUDGET_MS},
            "within_budget": self.within_budget(),
        })
    }
}

pub struct BenchOptions {
    pub reps: usize,
    pub featurize_reps: usize,
    pub points: usize,
    pub half_extent: f64,
    pub seed: u64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions { reps: 1000, featurize_reps: 5, points: 2093, half_extent: 10.0, seed: 7 }
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// `n` points uniform in the crop box.
pub fn uniform_scan(n: usize, half_extent: f64, seed: u64) -> Scan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = || rng.random_range(-half_extent..half_extent);
    let points = (0..n).map(|_| Point::new(c(), c(), c(), 10.0)).collect();
    Scan { frame_id: 0, timestamp: 0.0, points }
}

pub fn run(model: &MoEModel, opts: &BenchOptions) -> CliResult<BenchReport> {
    if opts.reps == 0 || opts.featurize_reps == 0 {
        return Err(CliError::usage("repetition counts must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, BENCH_STREAM));
    let s = &model.standardization;
    let probes: Vec<Vec<f64>> = (0..opts.reps)
        .map(|_| s.mean.iter().zip(&s.scale).map(|(m, sc)| m + sc * rng.random_range(-2.0..2.0)).collect())
        .collect();
    let mut ms = Vec::with_capacity(opts.reps);
    for x in &probes {
        let start = Instant::now();
        std::hint::black_box(model.infer(std::hint::black_box(x))?);
        ms.push(elapsed_ms(start));
    }
    let inference = Timing::from_samples(ms);

    let bbox = CropBox::new(opts.half_extent)?;
    let scan = uniform_scan(opts.points, opts.half_extent, derive_seed(opts.seed, BENCH_STREAM + 1));
    let reference = SharedReference::default();
    let start = Instant::now();
    reference.unit_length(opts.points);
    let reference_ms = elapsed_ms(start);
    let ms = (0..opts.featurize_reps)
        .map(|_| {
            let start = Instant::now();
            std::hint::black_box(scan_features(std::hint::black_box(&scan), &bbox, &reference));
            elapsed_ms(start)
        })
        .collect();
    Ok(BenchReport { inference, featurization: Timing::from_samples(ms), points: opts.points, reference_ms })
}
