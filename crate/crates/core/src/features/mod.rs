//! Per-scan and per-window statistics of rain-noise point clouds.

mod mst;
mod reference;
mod scan;
mod standardize;
mod window;

pub use mst::{mst_length, Position};
pub use reference::{CachedReference, MonteCarloReference, MstReference, REFERENCE_SEED};
pub use scan::{crop, CropBox, Point, Scan};
pub use standardize::Standardization;
pub use window::{
    normalized_mst, scan_features, window_features, ScanFeatures, WindowFeatures, WindowSample, FEATURE_DIM,
    FEATURE_NAMES,
};
