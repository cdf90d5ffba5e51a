//! JSON renderings of evaluation results.

use serde_json::{json, Value};

use rainrate_core::moe::EvaluationReport;

pub fn evaluation_json(r: &EvaluationReport) -> Value {
    json!({
        "samples": r.samples,
        "rmse_all": r.rmse_all,
        "mean_error_probability": r.mean_error_probability,
        "filtered": r.filtered.iter().map(|f| json!({
            "threshold": f.threshold,
            "rmse": f.rmse,
            "retention": f.retention,
        })).collect::<Vec<_>>(),
    })
}

/// One fixed-width table row: samples, RMSE, then RMSE (retention) per threshold.
pub fn table_row(name: &str, r: &EvaluationReport) -> String {
    let mut row = format!("{name:<12} {:>7} {:>9.3}", r.samples, r.rmse_all);
    for f in &r.filtered {
        let rmse = f.rmse.map_or("-".to_string(), |v| format!("{v:.3}"));
        row += &format!(" {:>8} ({:>5.1}%)", rmse, 100.0 * f.retention);
    }
    row += &format!(" {:>8.3}", r.mean_error_probability);
    row
}

pub fn table_header(thresholds: &[f64]) -> String {
    let mut h = format!("{:<12} {:>7} {:>9}", "subset", "samples", "rmse");
    for t in thresholds {
        h += &format!(" {:>17}", format!("rmse@ep<{t}"));
    }
    h += &format!(" {:>8}", "mean_ep");
    h
}
