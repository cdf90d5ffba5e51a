//! Deterministic synthetic rain-noise scans and disdrometer tracks.
//!
//! Scan statistics follow piecewise regime curves in the rainfall rate so
//! that different rate ranges call for different regression models.

mod params;
mod session;

pub use params::{NoiseRegimeParams, Regime, REFERENCE_EXTENT};
pub use session::{generate_scan, generate_session, RainProfile, SegmentPlan, SensorConfig, Session, SessionPlan};
