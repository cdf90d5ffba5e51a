//! `predict`: streaming inference over a sliding scan buffer.
//!
//! Emissions happen every `cadence` seconds once a full buffer is
//! available. The emission at time `t` uses the scans with timestamps in
//! `[t - buffer, t)` and is produced as soon as a scan at or after `t`
//! arrives; the tail of the stream is flushed at its end, up to one frame
//! period past the final scan.

use std::collections::VecDeque;

use serde_json::{json, Value};

use rainrate_core::features::{scan_features, window_features, CropBox, Scan, ScanFeatures, FEATURE_DIM};
use rainrate_core::moe::{ErrorMargin, MixturePrediction, MoEModel};

use crate::error::{CliError, CliResult};
use crate::featurize::SharedReference;

#[derive(Debug, Clone, PartialEq)]
pub struct Emission {
    pub time: f64,
    pub window: (f64, f64),
    pub frames: usize,
    pub flagged: bool,
    pub prediction: MixturePrediction,
}

impl Emission {
    pub fn to_json(&self) -> Value {
        json!({
            "time_s": self.time,
            "window_s": [self.window.0, self.window.1],
            "frames": self.frames,
            "flagged": self.flagged,
            "point_estimate_mm_h": self.prediction.point_estimate,
            "error_probability": self.prediction.error_probability,
            "responsibilities": self.prediction.responsibilities,
        })
    }
}

pub struct StreamPredictor<'a> {
    model: &'a MoEModel,
    margin: ErrorMargin,
    bbox: CropBox,
    reference: SharedReference,
    buffer: f64,
    cadence: f64,
    scans: VecDeque<(f64, ScanFeatures)>,
    first: Option<f64>,
    last: Option<f64>,
    seen: usize,
    next: u64,
    /// Emission times whose buffer held fewer than two scans.
    pub skipped: usize,
}

impl<'a> StreamPredictor<'a> {
    pub fn new(model: &'a MoEModel, bbox: CropBox, buffer: f64, cadence: f64, margin: ErrorMargin) -> CliResult<Self> {
        if model.feature_dim() != FEATURE_DIM {
            return Err(CliError::usage(format!(
                "model expects {} features but scans produce {FEATURE_DIM}",
                model.feature_dim()
            )));
        }
        if !(buffer > 0.0 && buffer.is_finite() && cadence > 0.0 && cadence.is_finite()) {
            return Err(CliError::usage(format!("buffer ({buffer} s) and cadence ({cadence} s) must be positive")));
        }
        margin.validate()?;
        Ok(StreamPredictor {
            model,
            margin,
            bbox,
            reference: SharedReference::default(),
            buffer,
            cadence,
            scans: VecDeque::new(),
            first: None,
            last: None,
            seen: 0,
            next: 0,
            skipped: 0,
        })
    }

    fn emission_time(&self, k: u64) -> Option<f64> {
        self.first.map(|t0| t0 + self.buffer + k as f64 * self.cadence)
    }

    fn emit(&mut self, t: f64) -> CliResult<Option<Emission>> {
        let start = t - self.buffer;
        let rows: Vec<ScanFeatures> =
            self.scans.iter().filter(|(ts, _)| *ts >= start && *ts < t).map(|(_, f)| *f).collect();
        if rows.len() < 2 {
            self.skipped += 1;
            return Ok(None);
        }
        let wf = window_features(&rows)?;
        let prediction = self.model.infer_with(&wf.values, &self.margin)?;
        Ok(Some(Emission { time: t, window: (start, t), frames: wf.frames, flagged: wf.flagged, prediction }))
    }

    /// Add the next scan; returns the emissions it completes.
    pub fn push(&mut self, scan: &Scan) -> CliResult<Vec<Emission>> {
        if let Some(prev) = self.last {
            if scan.timestamp < prev {
                return Err(CliError::usage(format!(
                    "scan {} at {} s precedes the previous scan at {prev} s",
                    scan.frame_id, scan.timestamp
                )));
            }
        }
        self.first.get_or_insert(scan.timestamp);
        self.last = Some(scan.timestamp);
        self.seen += 1;
        let mut out = Vec::new();
        while let Some(t) = self.emission_time(self.next).filter(|&t| scan.timestamp >= t) {
            self.next += 1;
            out.extend(self.emit(t)?);
        }
        let keep_from = self.emission_time(self.next).map_or(f64::NEG_INFINITY, |t| t - self.buffer);
        while self.scans.front().is_some_and(|(ts, _)| *ts < keep_from) {
            self.scans.pop_front();
        }
        self.scans.push_back((scan.timestamp, scan_features(scan, &self.bbox, &self.reference)));
        Ok(out)
    }

    /// Flush emissions covered by the end of the stream.
    pub fn finish(&mut self) -> CliResult<Vec<Emission>> {
        let (Some(t0), Some(t1)) = (self.first, self.last) else {
            return Ok(Vec::new());
        };
        if self.seen < 2 {
            return Ok(Vec::new());
        }
        let horizon = t1 + (t1 - t0) / (self.seen - 1) as f64;
        let slack = 1e-9 * (1.0 + horizon.abs());
        let mut out = Vec::new();
        while let Some(t) = self.emission_time(self.next).filter(|&t| t <= horizon + slack) {
            self.next += 1;
            out.extend(self.emit(t)?);
        }
        Ok(out)
    }
}
