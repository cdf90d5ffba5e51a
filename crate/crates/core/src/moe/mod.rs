//! Hierarchical mixture of experts over rainfall-rate ranges.

mod eval;
mod mixture;
mod model;
mod train;
mod tree;

pub use eval::{evaluate, filter_by_uncertainty, predict_all, rmse, summarize, EvaluationReport, FilteredMetric};
pub use mixture::{error_probability, mixture_density, point_estimate, ErrorMargin, MixturePrediction};
pub use model::{infer, responsibilities, MoEModel, ModelMetadata, NodeCounts, TrainingWarning};
pub use train::{train, train_with_provenance, Partition, TrainConfig};
pub use tree::{default_thresholds, Branch, RateRange, TreeSpec, MAX_DEPTH};
