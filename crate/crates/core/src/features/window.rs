use alloc::string::String;

use super::{crop, mst_length, CropBox, MstReference, Scan};
use crate::error::{invalid, Result};

pub const FEATURE_DIM: usize = 8;

/// Column names of the window feature vector, in order.
pub const FEATURE_NAMES: [&str; FEATURE_DIM] =
    ["mu_n", "sigma_n", "mu_intensity", "sigma_intensity", "mu_radial", "sigma_radial", "mu_mst", "sigma_mst"];

/// Statistics of one cropped scan. Undefined values are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanFeatures {
    pub n_points: usize,
    pub mean_intensity: Option<f64>,
    pub mean_radial: Option<f64>,
    pub norm_mst: Option<f64>,
}

impl ScanFeatures {
    fn values(&self) -> [Option<f64>; 4] {
        [Some(self.n_points as f64), self.mean_intensity, self.mean_radial, self.norm_mst]
    }
}

/// MST length relative to the expected length of as many uniform points in the box.
///
/// About 1 for uniform points, below 1 when clustered, above 1 when pushed
/// towards the box edges.
pub fn normalized_mst<P: super::Position, R: MstReference>(points: &[P], bbox: &CropBox, reference: &R) -> Option<f64> {
    let length = mst_length(points)?;
    let expected = reference.expected_length(points.len(), bbox.half_extent());
    (expected > 0.0).then(|| length / expected)
}

/// Crop `scan` and compute its four per-scan statistics.
pub fn scan_features<R: MstReference>(scan: &Scan, bbox: &CropBox, reference: &R) -> ScanFeatures {
    let cropped = crop(scan, bbox);
    let pts = &cropped.points;
    let n = pts.len();
    if n == 0 {
        return ScanFeatures { n_points: 0, mean_intensity: None, mean_radial: None, norm_mst: None };
    }
    let nf = n as f64;
    ScanFeatures {
        n_points: n,
        mean_intensity: Some(pts.iter().map(|p| p.intensity).sum::<f64>() / nf),
        mean_radial: Some(pts.iter().map(|p| p.radial()).sum::<f64>() / nf),
        norm_mst: normalized_mst(pts, bbox, reference),
    }
}

/// Window-level feature vector `[mu_N, sigma_N, mu_p, sigma_p, mu_r, sigma_r, mu_l, sigma_l]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowFeatures {
    pub values: [f64; FEATURE_DIM],
    /// Some per-scan statistic was undefined in every scan and was replaced by 0.
    pub flagged: bool,
    pub frames: usize,
}

/// Mean and population standard deviation of each per-scan statistic.
///
/// Undefined values are left out of that statistic; a statistic undefined in
/// every scan contributes `(0, 0)` and flags the window.
pub fn window_features(scans: &[ScanFeatures]) -> Result<WindowFeatures> {
    if scans.len() < 2 {
        return Err(invalid!("window statistics need at least 2 scans, got {}", scans.len()));
    }
    let mut values = [0.0; FEATURE_DIM];
    let mut flagged = false;
    for k in 0..4 {
        let (mut count, mut sum) = (0usize, 0.0);
        for s in scans {
            if let Some(v) = s.values()[k] {
                count += 1;
                sum += v;
            }
        }
        if count == 0 {
            flagged = true;
            continue;
        }
        let mean = sum / count as f64;
        let var =
            scans.iter().filter_map(|s| s.values()[k]).map(|v| (v - mean) * (v - mean)).sum::<f64>() / count as f64;
        values[2 * k] = mean;
        values[2 * k + 1] = libm::sqrt(var);
    }
    Ok(WindowFeatures { values, flagged, frames: scans.len() })
}

/// One training or evaluation sample.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub features: [f64; FEATURE_DIM],
    /// Mean ground-truth rainfall rate over the window, mm/h.
    pub target: f64,
    /// `[start, end)` in seconds.
    pub window: (f64, f64),
    pub session: String,
    pub segment_id: i64,
    pub frames: usize,
    pub flagged: bool,
}
