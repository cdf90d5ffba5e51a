//! `evaluate`: metrics, split breakdown and per-sample plot data.

use std::path::Path;

use serde_json::{json, Map, Value};

use rainrate_core::moe::{predict_all, summarize, ErrorMargin, EvaluationReport, MixturePrediction, MoEModel};
use rainrate_core::pipeline::{Dataset, Split};

use crate::atomic::write_atomic;
use crate::error::{CliError, CliResult};
use crate::report::{evaluation_json, table_header, table_row};

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub all: EvaluationReport,
    pub train: Option<EvaluationReport>,
    pub validation: Option<EvaluationReport>,
    pub predictions: Vec<(MixturePrediction, f64)>,
}

pub fn evaluate_dataset(
    model: &MoEModel,
    dataset: &Dataset,
    thresholds: &[f64],
    margin: &ErrorMargin,
) -> CliResult<Evaluation> {
    if dataset.is_empty() {
        return Err(CliError::usage("dataset has no rows to evaluate"));
    }
    if model.feature_dim() != rainrate_core::features::FEATURE_DIM {
        return Err(CliError::usage(format!(
            "model expects {} features but datasets carry {}",
            model.feature_dim(),
            rainrate_core::features::FEATURE_DIM
        )));
    }
    let predictions = predict_all(model, &dataset.samples, margin)?;
    let all = summarize(&predictions, thresholds)?;
    let part = |split: Split| -> CliResult<Option<EvaluationReport>> {
        let subset: Vec<_> =
            predictions.iter().zip(&dataset.splits).filter(|(_, s)| **s == split).map(|(p, _)| p.clone()).collect();
        Ok(if subset.is_empty() { None } else { Some(summarize(&subset, thresholds)?) })
    };
    Ok(Evaluation { train: part(Split::Train)?, validation: part(Split::Validation)?, all, predictions })
}

impl Evaluation {
    pub fn to_json(&self, thresholds: &[f64], margin: &ErrorMargin) -> Value {
        let mut splits = Map::new();
        splits.insert("train".into(), self.train.as_ref().map_or(Value::Null, evaluation_json));
        splits.insert("validation".into(), self.validation.as_ref().map_or(Value::Null, evaluation_json));
        json!({
            "thresholds": thresholds,
            "margin": {"fraction": margin.fraction, "floor": margin.floor},
            "all": evaluation_json(&self.all),
            "splits": splits,
        })
    }

    pub fn table(&self, thresholds: &[f64]) -> String {
        let mut lines = vec![table_header(thresholds), table_row("all", &self.all)];
        if let Some(r) = &self.train {
            lines.push(table_row("train", r));
        }
        if let Some(r) = &self.validation {
            lines.push(table_row("validation", r));
        }
        lines.join("\n")
    }
}

pub const PLOT_HEADER: [&str; 8] = [
    "target_mm_h",
    "point_estimate_mm_h",
    "error_probability",
    "split",
    "session",
    "segment_id",
    "window_start_s",
    "window_end_s",
];

/// One row per dataset row, in dataset order.
pub fn write_plot_data(path: &Path, dataset: &Dataset, eval: &Evaluation) -> CliResult<()> {
    write_atomic(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(PLOT_HEADER)?;
        for ((s, split), (p, _)) in dataset.samples.iter().zip(&dataset.splits).zip(&eval.predictions) {
            csv.write_record([
                s.target.to_string(),
                p.point_estimate.to_string(),
                p.error_probability.to_string(),
                split.as_str().to_string(),
                s.session.clone(),
                s.segment_id.to_string(),
                s.window.0.to_string(),
                s.window.1.to_string(),
            ])?;
        }
        csv.flush()
    })
}
