use alloc::vec::Vec;

use super::{ErrorMargin, MixturePrediction, MoEModel};
use crate::error::{invalid, Result};
use crate::features::WindowSample;

/// Predictions whose error probability is strictly below `threshold`, and
/// the retained fraction (`None` for empty input).
pub fn filter_by_uncertainty<'a>(
    predictions: &'a [(MixturePrediction, f64)],
    threshold: f64,
) -> Result<(Vec<&'a (MixturePrediction, f64)>, Option<f64>)> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(invalid!("error-probability threshold must lie in (0, 1], got {threshold}"));
    }
    let kept: Vec<_> = predictions.iter().filter(|(p, _)| p.error_probability < threshold).collect();
    let retention = (!predictions.is_empty()).then(|| kept.len() as f64 / predictions.len() as f64);
    Ok((kept, retention))
}

/// Root mean squared error of point estimates; `None` when empty.
pub fn rmse<'a, I>(pairs: I) -> Option<f64>
where
    I: IntoIterator<Item = &'a (MixturePrediction, f64)>,
{
    let (mut n, mut sum) = (0usize, 0.0);
    for (p, y) in pairs {
        let e = p.point_estimate - y;
        sum += e * e;
        n += 1;
    }
    (n > 0).then(|| libm::sqrt(sum / n as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilteredMetric {
    pub threshold: f64,
    /// `None` when no prediction survives the filter.
    pub rmse: Option<f64>,
    pub retention: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub samples: usize,
    pub rmse_all: f64,
    pub filtered: Vec<FilteredMetric>,
    pub mean_error_probability: f64,
}

impl EvaluationReport {
    pub fn at(&self, threshold: f64) -> Option<&FilteredMetric> {
        self.filtered.iter().find(|f| f.threshold == threshold)
    }

    pub fn rmse_at_25(&self) -> Option<f64> {
        self.at(0.25).and_then(|f| f.rmse)
    }

    pub fn retention_25(&self) -> Option<f64> {
        self.at(0.25).map(|f| f.retention)
    }

    pub fn rmse_at_10(&self) -> Option<f64> {
        self.at(0.10).and_then(|f| f.rmse)
    }

    pub fn retention_10(&self) -> Option<f64> {
        self.at(0.10).map(|f| f.retention)
    }
}

/// Summarize `(prediction, target)` pairs at each error-probability threshold.
pub fn summarize(predictions: &[(MixturePrediction, f64)], thresholds: &[f64]) -> Result<EvaluationReport> {
    if predictions.is_empty() {
        return Err(invalid!("cannot evaluate an empty dataset"));
    }
    let mut filtered = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let (kept, retention) = filter_by_uncertainty(predictions, t)?;
        filtered.push(FilteredMetric { threshold: t, rmse: rmse(kept), retention: retention.unwrap_or(0.0) });
    }
    let mean_error_probability =
        predictions.iter().map(|(p, _)| p.error_probability).sum::<f64>() / predictions.len() as f64;
    Ok(EvaluationReport {
        samples: predictions.len(),
        rmse_all: rmse(predictions).unwrap_or(0.0),
        filtered,
        mean_error_probability,
    })
}

/// Run inference on every sample, returning the pairs for further breakdowns.
pub fn predict_all(
    model: &MoEModel,
    samples: &[WindowSample],
    margin: &ErrorMargin,
) -> Result<Vec<(MixturePrediction, f64)>> {
    samples.iter().map(|s| Ok((model.infer_with(&s.features, margin)?, s.target))).collect()
}

pub fn evaluate(
    model: &MoEModel,
    samples: &[WindowSample],
    thresholds: &[f64],
    margin: &ErrorMargin,
) -> Result<EvaluationReport> {
    summarize(&predict_all(model, samples, margin)?, thresholds)
}
