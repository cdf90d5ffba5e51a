//! JSON persistence of trained models.
//!
//! Matrices are stored row-major as flat arrays with their dimension. Gate
//! `k` of the heap is `gates[k - 1]`; a gate's probability is that of the
//! target lying above its threshold, which selects the high (right) branch.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use rainrate_core::bayes::{Basis, ExpertPosterior, FitDiagnostics, GatePosterior, LinearConfig, LogisticConfig};
use rainrate_core::features::Standardization;
use rainrate_core::moe::{MoEModel, ModelMetadata, NodeCounts, TrainConfig, TrainingWarning, TreeSpec};

use crate::atomic::write_atomic;
use crate::error::{CliError, CliResult};

pub const FORMAT: &str = "rainrate-model";
pub const VERSION: u32 = 1;
pub const BRANCH_CONVENTION: &str = "gate-true-is-high";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BasisDto {
    LinearWithBias,
    Polynomial { degree: usize },
}

impl From<Basis> for BasisDto {
    fn from(b: Basis) -> Self {
        match b {
            Basis::LinearWithBias => BasisDto::LinearWithBias,
            Basis::Polynomial { degree } => BasisDto::Polynomial { degree },
        }
    }
}

impl From<BasisDto> for Basis {
    fn from(b: BasisDto) -> Self {
        match b {
            BasisDto::LinearWithBias => Basis::LinearWithBias,
            BasisDto::Polynomial { degree } => Basis::Polynomial { degree },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixDto {
    pub rows: usize,
    pub cols: usize,
    /// Row-major entries.
    pub data: Vec<f64>,
}

impl MatrixDto {
    fn new(m: &DMatrix<f64>) -> Self {
        let data = (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).collect();
        MatrixDto { rows: m.nrows(), cols: m.ncols(), data }
    }

    fn to_matrix(&self) -> Result<DMatrix<f64>, String> {
        if self.data.len() != self.rows * self.cols {
            return Err(format!("{}x{} matrix has {} entries", self.rows, self.cols, self.data.len()));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DiagnosticsDto {
    pub iterations: usize,
    pub converged: bool,
    pub lower_bounds: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GateDto {
    pub threshold: f64,
    pub mean: Vec<f64>,
    pub covariance: MatrixDto,
    pub xi: Vec<f64>,
    pub basis: BasisDto,
    pub degenerate: bool,
    pub diagnostics: DiagnosticsDto,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExpertDto {
    /// `[lo, hi)` in mm/h.
    pub range: [f64; 2],
    pub mean: Vec<f64>,
    pub covariance: MatrixDto,
    pub noise_precision: f64,
    pub weight_precision: f64,
    pub basis: BasisDto,
    pub diagnostics: DiagnosticsDto,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TreeDto {
    pub depth: usize,
    pub y_min: f64,
    pub y_max: f64,
    /// Heap order.
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrainConfigDto {
    pub basis: BasisDto,
    pub gate_prior_precision: f64,
    pub gate_max_iters: usize,
    pub gate_tol: f64,
    pub expert_alpha_shape: f64,
    pub expert_alpha_rate: f64,
    pub expert_fixed_alpha: Option<f64>,
    pub expert_alpha_init: f64,
    pub expert_beta_init: f64,
    pub expert_max_iters: usize,
    pub expert_tol: f64,
    pub balance_classes: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WarningDto {
    DegenerateGate { gate: usize, label: bool },
    ConstantFeature { dim: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelDto {
    pub format: String,
    pub version: u32,
    pub branch_convention: String,
    pub tree: TreeDto,
    pub standardization: StandardizationDto,
    pub gates: Vec<GateDto>,
    pub experts: Vec<ExpertDto>,
    pub seed: u64,
    pub config: TrainConfigDto,
    pub gate_counts: Vec<[usize; 2]>,
    pub expert_counts: Vec<usize>,
    pub warnings: Vec<WarningDto>,
    pub provenance: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StandardizationDto {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

fn diag(d: &FitDiagnostics) -> DiagnosticsDto {
    DiagnosticsDto { iterations: d.iterations, converged: d.converged, lower_bounds: d.lower_bounds.clone() }
}

fn undiag(d: DiagnosticsDto) -> FitDiagnostics {
    FitDiagnostics { iterations: d.iterations, converged: d.converged, lower_bounds: d.lower_bounds }
}

impl ModelDto {
    pub fn from_model(m: &MoEModel) -> Self {
        let spec = &m.spec;
        let c = &m.metadata.config;
        ModelDto {
            format: FORMAT.into(),
            version: VERSION,
            branch_convention: BRANCH_CONVENTION.into(),
            tree: TreeDto {
                depth: spec.depth(),
                y_min: spec.expert_ranges()[0].lo,
                y_max: spec.y_max(),
                thresholds: spec.thresholds().to_vec(),
            },
            standardization: StandardizationDto {
                mean: m.standardization.mean.clone(),
                scale: m.standardization.scale.clone(),
            },
            gates: m
                .gates
                .iter()
                .enumerate()
                .map(|(i, g)| GateDto {
                    threshold: spec.threshold(i + 1),
                    mean: g.mean.as_slice().to_vec(),
                    covariance: MatrixDto::new(&g.covariance),
                    xi: g.xi.clone(),
                    basis: g.basis.into(),
                    degenerate: g.degenerate,
                    diagnostics: diag(&g.diagnostics),
                })
                .collect(),
            experts: m
                .experts
                .iter()
                .zip(spec.expert_ranges())
                .map(|(e, r)| ExpertDto {
                    range: [r.lo, r.hi],
                    mean: e.mean.as_slice().to_vec(),
                    covariance: MatrixDto::new(&e.covariance),
                    noise_precision: e.noise_precision,
                    weight_precision: e.weight_precision,
                    basis: e.basis.into(),
                    diagnostics: diag(&e.diagnostics),
                })
                .collect(),
            seed: m.metadata.seed,
            config: TrainConfigDto {
                basis: c.basis.into(),
                gate_prior_precision: c.gate.prior_precision,
                gate_max_iters: c.gate.max_iters,
                gate_tol: c.gate.tol,
                expert_alpha_shape: c.expert.alpha_shape,
                expert_alpha_rate: c.expert.alpha_rate,
                expert_fixed_alpha: c.expert.fixed_alpha,
                expert_alpha_init: c.expert.alpha_init,
                expert_beta_init: c.expert.beta_init,
                expert_max_iters: c.expert.max_iters,
                expert_tol: c.expert.tol,
                balance_classes: c.balance_classes,
            },
            gate_counts: m.metadata.counts.gates.iter().map(|&(lo, hi)| [lo, hi]).collect(),
            expert_counts: m.metadata.counts.experts.clone(),
            warnings: m
                .metadata
                .warnings
                .iter()
                .map(|w| match *w {
                    TrainingWarning::DegenerateGate { gate, label } => WarningDto::DegenerateGate { gate, label },
                    TrainingWarning::ConstantFeature { dim } => WarningDto::ConstantFeature { dim },
                })
                .collect(),
            provenance: m.metadata.provenance.clone(),
        }
    }

    pub fn into_model(self) -> Result<MoEModel, String> {
        if self.format != FORMAT {
            return Err(format!("not a model file (format {:?})", self.format));
        }
        if self.version != VERSION {
            return Err(format!("unsupported model version {}, expected {VERSION}", self.version));
        }
        if self.branch_convention != BRANCH_CONVENTION {
            return Err(format!("unknown branch convention {:?}", self.branch_convention));
        }
        let t = &self.tree;
        let spec = TreeSpec::new(t.depth, t.y_min, t.y_max, Some(&t.thresholds)).map_err(|e| e.to_string())?;
        let gates = self
            .gates
            .into_iter()
            .map(|g| {
                Ok(GatePosterior {
                    mean: DVector::from_vec(g.mean),
                    covariance: g.covariance.to_matrix()?,
                    xi: g.xi,
                    basis: g.basis.into(),
                    degenerate: g.degenerate,
                    diagnostics: undiag(g.diagnostics),
                })
            })
            .collect::<Result<Vec<_>, String>>()?;
        let experts = self
            .experts
            .into_iter()
            .map(|e| {
                Ok(ExpertPosterior {
                    mean: DVector::from_vec(e.mean),
                    covariance: e.covariance.to_matrix()?,
                    noise_precision: e.noise_precision,
                    weight_precision: e.weight_precision,
                    basis: e.basis.into(),
                    diagnostics: undiag(e.diagnostics),
                })
            })
            .collect::<Result<Vec<_>, String>>()?;
        let c = self.config;
        let config = TrainConfig {
            basis: c.basis.into(),
            gate: LogisticConfig {
                prior_precision: c.gate_prior_precision,
                max_iters: c.gate_max_iters,
                tol: c.gate_tol,
            },
            expert: LinearConfig {
                alpha_shape: c.expert_alpha_shape,
                alpha_rate: c.expert_alpha_rate,
                fixed_alpha: c.expert_fixed_alpha,
                alpha_init: c.expert_alpha_init,
                beta_init: c.expert_beta_init,
                max_iters: c.expert_max_iters,
                tol: c.expert_tol,
            },
            balance_classes: c.balance_classes,
        };
        let warnings = self
            .warnings
            .into_iter()
            .map(|w| match w {
                WarningDto::DegenerateGate { gate, label } => TrainingWarning::DegenerateGate { gate, label },
                WarningDto::ConstantFeature { dim } => TrainingWarning::ConstantFeature { dim },
            })
            .collect();
        let model = MoEModel {
            spec,
            gates,
            experts,
            standardization: Standardization { mean: self.standardization.mean, scale: self.standardization.scale },
            metadata: ModelMetadata {
                seed: self.seed,
                config,
                counts: NodeCounts {
                    gates: self.gate_counts.into_iter().map(|[a, b]| (a, b)).collect(),
                    experts: self.expert_counts,
                },
                warnings,
                provenance: self.provenance,
            },
        };
        model.validate().map_err(|e| e.to_string())?;
        Ok(model)
    }
}

pub fn model_to_json(model: &MoEModel) -> String {
    let mut s = serde_json::to_string_pretty(&ModelDto::from_model(model)).expect("model DTO serializes");
    s.push('\n');
    s
}

pub fn model_from_json(text: &str, path: &Path) -> CliResult<MoEModel> {
    let dto: ModelDto = serde_json::from_str(text).map_err(|e| CliError::parse(path, e.line(), e))?;
    dto.into_model().map_err(|e| CliError::file(path, e))
}

pub fn save_model(path: &Path, model: &MoEModel) -> CliResult<()> {
    let text = model_to_json(model);
    write_atomic(path, |w| w.write_all(text.as_bytes()))
}

pub fn load_model(path: &Path) -> CliResult<MoEModel> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
    model_from_json(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rainrate_core::features::WindowSample;
    use rainrate_core::moe::train;

    fn model() -> MoEModel {
        let samples: Vec<WindowSample> = (0..60)
            .map(|i| {
                let f = i as f64 * 0.1;
                let mut features = [0.0; 8];
                for (k, v) in features.iter_mut().enumerate() {
                    *v = f * (k as f64 + 1.0) + (3.0 * f + k as f64).sin();
                }
                WindowSample {
                    features,
                    target: 1.2 * i as f64,
                    window: (0.0, 10.0),
                    session: "t".into(),
                    segment_id: 0,
                    frames: 100,
                    flagged: false,
                }
            })
            .collect();
        let spec = TreeSpec::new(2, 0.0, 80.0, Some(&[20.0, 10.0, 40.0])).unwrap();
        train(&samples, &spec, &TrainConfig::default(), 5).unwrap()
    }

    #[test]
    fn round_trip_preserves_predictions() {
        let m = model();
        let text = model_to_json(&m);
        let back = model_from_json(&text, Path::new("m.json")).unwrap();
        assert_eq!(back, m);
        let x = [0.3, -1.0, 2.0, 0.5, 0.1, 4.0, -0.2, 1.0];
        let (a, b) = (m.infer(&x).unwrap(), back.infer(&x).unwrap());
        assert!((a.point_estimate - b.point_estimate).abs() <= 1e-12);
        assert_eq!(model_to_json(&back), text);
    }

    #[test]
    fn rejects_foreign_or_broken_files() {
        let m = model();
        let mut dto = ModelDto::from_model(&m);
        dto.version = 9;
        assert!(dto.into_model().unwrap_err().contains("version 9"));
        let mut dto = ModelDto::from_model(&m);
        dto.experts[0].covariance.data.pop();
        assert!(dto.into_model().is_err());
        let err = model_from_json("{\"format\": 1", Path::new("m.json")).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
