//! Ground-truth preparation, windowing and dataset splits.

mod savgol;
mod series;
mod windows;

use alloc::vec::Vec;

pub use savgol::{savgol, savgol_weights};
pub use series::{measurement_volatility, target_for_window, RainSeries, SegmentSpan};
pub use windows::{make_windows, make_windows_from_features, window_starts, SkipCounts, WindowConfig, Windowing};

use crate::error::Result;
use crate::features::WindowSample;

pub const SAVGOL_WINDOW: usize = 9;
pub const SAVGOL_ORDER: usize = 2;
pub const TRIM_COUNT: usize = 10;
pub const VALIDATION_SPAN: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PipelineWarning {
    /// Segment too short to trim (or to smooth) and removed.
    SegmentDropped { segment_id: i64, len: usize },
    /// Segment too short to give up a central validation slice.
    ShortValidationSegment { segment_id: i64, duration: f64 },
}

/// Drop the first and last `n_cut` measurements of every segment. Segments
/// with at most `2 * n_cut` measurements are removed.
pub fn trim_segments(series: &RainSeries, n_cut: usize) -> (RainSeries, Vec<PipelineWarning>) {
    let mut keep = Vec::new();
    let mut warnings = Vec::new();
    for r in series.segments() {
        if r.len() > 2 * n_cut {
            keep.push(r.start + n_cut..r.end - n_cut);
        } else {
            warnings.push(PipelineWarning::SegmentDropped { segment_id: series.segment_ids[r.start], len: r.len() });
        }
    }
    (series.subset(&keep), warnings)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroundTruthConfig {
    pub window: usize,
    pub order: usize,
    pub n_cut: usize,
}

impl Default for GroundTruthConfig {
    fn default() -> Self {
        GroundTruthConfig { window: SAVGOL_WINDOW, order: SAVGOL_ORDER, n_cut: TRIM_COUNT }
    }
}

/// Smooth each segment, clamp at zero, then trim.
///
/// Segments shorter than the filter window are dropped with a warning.
pub fn prepare_ground_truth(
    raw: &RainSeries,
    config: &GroundTruthConfig,
) -> Result<(RainSeries, Vec<PipelineWarning>)> {
    raw.validate()?;
    savgol_weights(config.window, config.order)?;
    let mut smoothed = RainSeries::empty();
    let mut warnings = Vec::new();
    for r in raw.segments() {
        if r.len() < config.window {
            warnings.push(PipelineWarning::SegmentDropped { segment_id: raw.segment_ids[r.start], len: r.len() });
            continue;
        }
        let filtered = savgol(&raw.rates[r.clone()], config.window, config.order)?;
        smoothed.timestamps.extend_from_slice(&raw.timestamps[r.clone()]);
        smoothed.rates.extend(filtered.into_iter().map(|v| v.max(0.0)));
        smoothed.segment_ids.extend_from_slice(&raw.segment_ids[r]);
    }
    let (trimmed, more) = trim_segments(&smoothed, config.n_cut);
    warnings.extend(more);
    Ok((trimmed, warnings))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Validation,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
        }
    }
}

impl core::str::FromStr for Split {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            other => Err(crate::error::invalid!("unknown split tag {other:?}")),
        }
    }
}

/// Samples with one split tag each plus the settings that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<WindowSample>,
    pub splits: Vec<Split>,
    pub config: WindowConfig,
}

impl Dataset {
    pub fn new(samples: Vec<WindowSample>, config: WindowConfig) -> Self {
        let splits = alloc::vec![Split::Train; samples.len()];
        Dataset { samples, splits, config }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn subset(&self, split: Split) -> Vec<WindowSample> {
        self.samples.iter().zip(&self.splits).filter(|(_, s)| **s == split).map(|(x, _)| x.clone()).collect()
    }
}

/// Tag as validation every window overlapping the central `span` seconds of
/// its segment. `segments` are the untrimmed segment extents.
///
/// Segments shorter than `3 * span` stay entirely in training.
pub fn split_validation(dataset: &Dataset, segments: &[SegmentSpan], span: f64) -> (Dataset, Vec<PipelineWarning>) {
    let mut warnings = Vec::new();
    let mut slices = Vec::new();
    for sp in segments {
        if sp.duration() < 3.0 * span {
            warnings
                .push(PipelineWarning::ShortValidationSegment { segment_id: sp.segment_id, duration: sp.duration() });
        } else {
            let c = sp.centre();
            slices.push((sp.segment_id, c - 0.5 * span, c + 0.5 * span));
        }
    }
    let splits = dataset
        .samples
        .iter()
        .map(|s| {
            let (a, b) = s.window;
            let hit = slices.iter().any(|&(id, lo, hi)| id == s.segment_id && a < hi && b > lo);
            if hit {
                Split::Validation
            } else {
                Split::Train
            }
        })
        .collect();
    (Dataset { samples: dataset.samples.clone(), splits, config: dataset.config }, warnings)
}
