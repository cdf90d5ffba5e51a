//! `synth`: a synthetic session written as scan and disdrometer files.

use std::path::Path;

use rainrate_core::math::derive_seed;
use rainrate_core::synth::{NoiseRegimeParams, RainProfile, SegmentPlan, SessionPlan};

use crate::atomic::write_atomic;
use crate::error::{CliError, CliResult};
use crate::experiment::SESSION_STREAM;
use crate::formats::disdrometer::save_series;
use crate::formats::scan::write_scan;

/// Parse `RATE:DURATION[:RAMP]` (ramp defaults to half the duration).
pub fn parse_segment(s: &str) -> Result<SegmentPlan, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if !(2..=3).contains(&parts.len()) {
        return Err(format!("segment {s:?} is not RATE:DURATION[:RAMP]"));
    }
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("segment {s:?}: {e}"));
    let rate = num(parts[0])?;
    let duration = num(parts[1])?;
    let ramp = parts.get(2).map(|v| num(v)).transpose()?.unwrap_or(0.5 * duration);
    Ok(SegmentPlan { duration, rate, ramp })
}

pub struct SynthOptions {
    pub seed: u64,
    pub half_extent: f64,
    pub segments: Option<Vec<SegmentPlan>>,
}

pub struct SynthSummary {
    pub scans: usize,
    pub points: usize,
    pub disdrometer_samples: usize,
}

pub fn run(scans: &Path, disdrometer: &Path, opts: &SynthOptions) -> CliResult<SynthSummary> {
    let mut profile = RainProfile::default();
    if let Some(s) = &opts.segments {
        if s.is_empty() {
            return Err(CliError::usage("at least one segment is required"));
        }
        profile.segments = s.clone();
    }
    let plan = SessionPlan::new(
        &profile,
        &NoiseRegimeParams::default(),
        opts.half_extent,
        derive_seed(opts.seed, SESSION_STREAM),
    )?;
    let mut points = 0;
    write_atomic(scans, |w| {
        for i in 0..plan.frame_count() {
            let scan = plan.scan(i);
            points += scan.points.len();
            write_scan(w, &scan)?;
        }
        Ok(())
    })?;
    save_series(disdrometer, &plan.series)?;
    Ok(SynthSummary { scans: plan.frame_count(), points, disdrometer_samples: plan.series.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_syntax() {
        assert_eq!(parse_segment("15:500:250").unwrap(), SegmentPlan { rate: 15.0, duration: 500.0, ramp: 250.0 });
        assert_eq!(parse_segment("30:60").unwrap().ramp, 30.0);
        assert!(parse_segment("30").is_err());
        assert!(parse_segment("a:1").is_err());
    }
}
