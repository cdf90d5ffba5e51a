use alloc::string::String;
use alloc::vec::Vec;

use super::{Branch, ErrorMargin, MixturePrediction, TrainConfig, TreeSpec};
use crate::bayes::{check_finite, ExpertPosterior, GatePosterior};
use crate::error::{invalid, Result};
use crate::features::Standardization;

/// Non-fatal conditions met while training.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainingWarning {
    /// Every training label of the gate was `label`.
    DegenerateGate { gate: usize, label: bool },
    /// The feature had zero variance; it is centered but not scaled.
    ConstantFeature { dim: usize },
}

/// Sample counts per node, before class balancing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodeCounts {
    /// `(below threshold, above threshold)` per gate.
    pub gates: Vec<(usize, usize)>,
    pub experts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelMetadata {
    pub seed: u64,
    pub config: TrainConfig,
    pub counts: NodeCounts,
    pub warnings: Vec<TrainingWarning>,
    /// Free-form description of the training data.
    pub provenance: String,
}

/// A trained hierarchical mixture of experts.
#[derive(Debug, Clone, PartialEq)]
pub struct MoEModel {
    pub spec: TreeSpec,
    /// Heap order: `gates[k - 1]` is gate `k`.
    pub gates: Vec<GatePosterior>,
    pub experts: Vec<ExpertPosterior>,
    pub standardization: Standardization,
    pub metadata: ModelMetadata,
}

impl MoEModel {
    pub fn validate(&self) -> Result<()> {
        if self.gates.len() != self.spec.gate_count() || self.experts.len() != self.spec.expert_count() {
            return Err(invalid!(
                "model has {} gates and {} experts, depth {} needs {} and {}",
                self.gates.len(),
                self.experts.len(),
                self.spec.depth(),
                self.spec.gate_count(),
                self.spec.expert_count()
            ));
        }
        if self.standardization.scale.iter().any(|s| !(*s > 0.0)) {
            return Err(invalid!("standardization scales must be positive"));
        }
        let dim = self.feature_dim();
        let d = |b: crate::bayes::Basis| b.output_dim(dim);
        for (k, g) in self.gates.iter().enumerate() {
            if g.dim() != d(g.basis) || g.covariance.shape() != (g.dim(), g.dim()) {
                return Err(invalid!("gate {} dimension does not match {dim} features", k + 1));
            }
        }
        for (m, e) in self.experts.iter().enumerate() {
            if e.dim() != d(e.basis) || e.covariance.shape() != (e.dim(), e.dim()) || !(e.noise_precision > 0.0) {
                return Err(invalid!("expert {} is malformed for {dim} features", m + 1));
            }
        }
        Ok(())
    }

    pub fn feature_dim(&self) -> usize {
        self.standardization.dim()
    }

    /// Gate probabilities `P(z_k = True | x)` in heap order.
    pub fn gate_probabilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z = self.standardize(x)?;
        self.gates.iter().map(|g| g.predict(&z)).collect()
    }

    /// Predictive mixture with the default ±5% error band.
    pub fn infer(&self, x: &[f64]) -> Result<MixturePrediction> {
        self.infer_with(x, &ErrorMargin::default())
    }

    pub fn infer_with(&self, x: &[f64], margin: &ErrorMargin) -> Result<MixturePrediction> {
        let z = self.standardize(x)?;
        let gate_p: Vec<f64> = self.gates.iter().map(|g| g.predict(&z)).collect::<Result<_>>()?;
        let responsibilities = responsibilities(&self.spec, &gate_p);
        let components = self.experts.iter().map(|e| e.predict(&z)).collect::<Result<Vec<_>>>()?;
        MixturePrediction::new(responsibilities, components, margin)
    }

    fn standardize(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.feature_dim() {
            return Err(invalid!("model expects {} features, got {}", self.feature_dim(), x.len()));
        }
        check_finite(x, "feature vector")?;
        self.standardization.apply(x)
    }
}

/// Products of gate probabilities along every root-to-leaf path.
pub fn responsibilities(spec: &TreeSpec, gate_probabilities: &[f64]) -> Vec<f64> {
    (0..spec.expert_count())
        .map(|m| {
            spec.expert_path(m)
                .into_iter()
                .map(|(k, b)| {
                    let p = gate_probabilities[k - 1];
                    match b {
                        Branch::High => p,
                        Branch::Low => 1.0 - p,
                    }
                })
                .product()
        })
        .collect()
}

/// Free-function form of [`MoEModel::infer`].
pub fn infer(model: &MoEModel, x: &[f64]) -> Result<MixturePrediction> {
    model.infer(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_products() {
        let spec = TreeSpec::new(2, 0.0, 80.0, Some(&[20.0, 10.0, 40.0])).unwrap();
        let r = responsibilities(&spec, &[0.5, 0.5, 0.5]);
        assert_eq!(r, alloc::vec![0.25; 4]);
        let r = responsibilities(&spec, &[0.9, 0.3, 0.2]);
        assert!((r[2] - 0.72).abs() < 1e-15);
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let spec0 = TreeSpec::new(0, 0.0, 80.0, None).unwrap();
        assert_eq!(responsibilities(&spec0, &[]), alloc::vec![1.0]);
    }
}
