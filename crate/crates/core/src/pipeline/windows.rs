use alloc::string::String;
use alloc::vec::Vec;

use super::{target_for_window, RainSeries};
use crate::error::{invalid, Result};
use crate::features::{scan_features, window_features, CropBox, MstReference, Scan, ScanFeatures, WindowSample};

/// How scan streams are cut into samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowConfig {
    /// Window length, seconds.
    pub duration: f64,
    /// Start-to-start spacing, seconds. Equal to `duration` gives disjoint windows.
    pub stride: f64,
    /// Crop box half extent, metres.
    pub half_extent: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig { duration: 10.0, stride: 10.0, half_extent: 10.0 }
    }
}

impl WindowConfig {
    pub fn with_duration(duration: f64) -> Self {
        WindowConfig { duration, stride: duration, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(invalid!("window duration must be positive, got {}", self.duration));
        }
        if !(self.stride > 0.0 && self.stride.is_finite()) {
            return Err(invalid!("window stride must be positive, got {}", self.stride));
        }
        CropBox::new(self.half_extent).map(|_| ())
    }

    pub fn crop_box(&self) -> Result<CropBox> {
        CropBox::new(self.half_extent)
    }
}

/// Why windows were dropped.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SkipCounts {
    /// No single ground-truth segment covers the window.
    pub no_target: usize,
    /// Fewer than two scans fell in the window.
    pub too_few_scans: usize,
}

impl SkipCounts {
    pub fn total(&self) -> usize {
        self.no_target + self.too_few_scans
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Windowing {
    pub samples: Vec<WindowSample>,
    pub skipped: SkipCounts,
    /// Number of candidate windows examined.
    pub candidates: usize,
}

/// Window start times tiling `[first, last]` of a scan clock.
///
/// The window covering the final scan ends one frame period after it, so a
/// stream of `k * duration * rate` frames gives exactly `k` windows.
pub fn window_starts(timestamps: &[f64], config: &WindowConfig) -> Vec<f64> {
    let n = timestamps.len();
    if n < 2 {
        return Vec::new();
    }
    let t0 = timestamps[0];
    let period = (timestamps[n - 1] - t0) / (n - 1) as f64;
    let horizon = timestamps[n - 1] + period;
    // tolerance absorbs round-off in accumulated frame clocks
    let slack = 1e-9 * (1.0 + libm::fabs(horizon));
    let mut out = Vec::new();
    let mut k = 0u64;
    loop {
        let s = t0 + k as f64 * config.stride;
        if s + config.duration > horizon + slack {
            break;
        }
        out.push(s);
        k += 1;
    }
    out
}

/// Cut precomputed per-scan statistics into samples.
///
/// `timestamps` must be non-decreasing and parallel to `features`.
pub fn make_windows_from_features(
    timestamps: &[f64],
    features: &[ScanFeatures],
    series: &RainSeries,
    config: &WindowConfig,
    session: &str,
) -> Result<Windowing> {
    config.validate()?;
    if timestamps.len() != features.len() {
        return Err(invalid!("{} timestamps for {} scan feature rows", timestamps.len(), features.len()));
    }
    if let Some(i) = (1..timestamps.len()).find(|&i| timestamps[i] < timestamps[i - 1]) {
        return Err(invalid!("scans must be time ordered, scan {i} precedes scan {}", i - 1));
    }
    let spans = series.segment_spans();
    let starts = window_starts(timestamps, config);
    let mut skipped = SkipCounts::default();
    let mut samples = Vec::new();
    for &s in &starts {
        let e = s + config.duration;
        let Some(target) = target_for_window(series, (s, e)) else {
            skipped.no_target += 1;
            continue;
        };
        let lo = timestamps.partition_point(|&t| t < s);
        let hi = timestamps.partition_point(|&t| t < e);
        if hi - lo < 2 {
            skipped.too_few_scans += 1;
            continue;
        }
        let wf = window_features(&features[lo..hi])?;
        let segment_id = spans
            .iter()
            .find(|sp| sp.start <= s && e <= sp.end)
            .map(|sp| sp.segment_id)
            .expect("a covered window lies in one segment");
        samples.push(WindowSample {
            features: wf.values,
            target,
            window: (s, e),
            session: String::from(session),
            segment_id,
            frames: wf.frames,
            flagged: wf.flagged,
        });
    }
    Ok(Windowing { samples, skipped, candidates: starts.len() })
}

/// Featurize and window a scan stream sequentially.
pub fn make_windows<R: MstReference>(
    scans: &[Scan],
    series: &RainSeries,
    config: &WindowConfig,
    reference: &R,
    session: &str,
) -> Result<Windowing> {
    let bbox = config.crop_box()?;
    let timestamps: Vec<f64> = scans.iter().map(|s| s.timestamp).collect();
    let features: Vec<ScanFeatures> = scans.iter().map(|s| scan_features(s, &bbox, reference)).collect();
    make_windows_from_features(&timestamps, &features, series, config, session)
}
