//! `train`: fit a mixture-of-experts tree on a dataset file.

use std::path::Path;

use serde_json::{json, Value};

use rainrate_core::math::derive_seed;
use rainrate_core::moe::{
    evaluate, train_with_provenance, ErrorMargin, MoEModel, TrainConfig, TrainingWarning, TreeSpec,
};
use rainrate_core::pipeline::Split;

use crate::atomic::write_atomic;
use crate::error::CliResult;
use crate::experiment::TRAIN_STREAM;
use crate::formats::dataset::load_dataset;
use crate::formats::model::save_model;
use crate::report::evaluation_json;

pub struct TrainOptions {
    pub spec: TreeSpec,
    pub seed: u64,
    /// Train on every row instead of the train split only.
    pub all_splits: bool,
    pub thresholds: Vec<f64>,
    pub margin: ErrorMargin,
}

pub fn describe(w: &TrainingWarning) -> String {
    match *w {
        TrainingWarning::DegenerateGate { gate, label } => {
            format!("gate {gate} saw only {} samples", if label { "above-threshold" } else { "below-threshold" })
        }
        TrainingWarning::ConstantFeature { dim } => {
            format!("feature {dim} is constant in the training set")
        }
    }
}

pub fn run(data: &Path, out: &Path, report: Option<&Path>, opts: &TrainOptions) -> CliResult<(MoEModel, Value)> {
    let file = load_dataset(data)?;
    let samples = if opts.all_splits { file.dataset.samples.clone() } else { file.dataset.subset(Split::Train) };
    let provenance = format!(
        "train data={} rows={} seed={} thresholds={:?}; dataset: {}",
        data.display(),
        samples.len(),
        opts.seed,
        opts.spec.thresholds(),
        file.provenance
    );
    let model = train_with_provenance(
        &samples,
        &opts.spec,
        &TrainConfig::default(),
        derive_seed(opts.seed, TRAIN_STREAM),
        provenance,
    )?;
    save_model(out, &model)?;
    let fit = evaluate(&model, &samples, &opts.thresholds, &opts.margin)?;
    let node = |d: &rainrate_core::bayes::FitDiagnostics| json!({"iterations": d.iterations, "converged": d.converged});
    let summary = json!({
        "data": data.display().to_string(),
        "model": out.display().to_string(),
        "seed": opts.seed,
        "depth": opts.spec.depth(),
        "thresholds": opts.spec.thresholds(),
        "training_rows": samples.len(),
        "gate_counts": model.metadata.counts.gates.iter().map(|(lo, hi)| json!({"below": lo, "above": hi})).collect::<Vec<_>>(),
        "expert_counts": model.metadata.counts.experts,
        "gates": model.gates.iter().map(|g| node(&g.diagnostics)).collect::<Vec<_>>(),
        "experts": model.experts.iter().map(|e| {
            let mut v = node(&e.diagnostics);
            v["noise_precision"] = json!(e.noise_precision);
            v["weight_precision"] = json!(e.weight_precision);
            v
        }).collect::<Vec<_>>(),
        "warnings": model.metadata.warnings.iter().map(describe).collect::<Vec<_>>(),
        "fit": evaluation_json(&fit),
    });
    if let Some(path) = report {
        let text = serde_json::to_string_pretty(&summary).expect("report serializes");
        write_atomic(path, |w| writeln!(w, "{text}"))?;
    }
    Ok((model, summary))
}
