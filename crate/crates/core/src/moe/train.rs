use alloc::string::String;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{MoEModel, ModelMetadata, NodeCounts, TrainingWarning, TreeSpec};
use crate::bayes::{fit_vb_linear, fit_vb_logistic, Basis, LinearConfig, LogisticConfig};
use crate::error::{invalid, Error, Result};
use crate::features::{Standardization, WindowSample};
use crate::math::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub basis: Basis,
    pub gate: LogisticConfig,
    pub expert: LinearConfig,
    /// Duplicate minority-class gate samples until both classes are equally frequent.
    pub balance_classes: bool,
}

impl Default for TrainConfig {
    /// Gates use a weak prior (precision 0.01): on globally standardized
    /// features the bias must offset each threshold, and a unit prior keeps
    /// the gates too soft. Experts start from a confident noise precision
    /// (100, i.e. 0.1 mm/h) so the evidence iteration does not settle on the
    /// all-noise solution when an expert has about as many samples as weights.
    fn default() -> Self {
        TrainConfig {
            basis: Basis::LinearWithBias,
            gate: LogisticConfig { prior_precision: 0.01, ..LogisticConfig::default() },
            expert: LinearConfig { beta_init: 100.0, ..LinearConfig::default() },
            balance_classes: true,
        }
    }
}

/// Which training samples each node sees.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    /// Sample indices per gate (heap order), with label `y > h_k`.
    pub gates: Vec<Vec<(usize, bool)>>,
    /// Sample indices per expert.
    pub experts: Vec<Vec<usize>>,
}

impl Partition {
    /// A gate learns from the samples whose target lies inside the union of
    /// its subtree's expert ranges; an expert learns from its own range. The
    /// top range is open-ended.
    pub fn compute(targets: &[f64], spec: &TreeSpec) -> Self {
        let mut experts = alloc::vec![Vec::new(); spec.expert_count()];
        let owner: Vec<usize> = targets.iter().map(|&y| spec.expert_for(y)).collect();
        for (i, &m) in owner.iter().enumerate() {
            experts[m].push(i);
        }
        let gates = (1..=spec.gate_count())
            .map(|k| {
                let under = spec.gate_experts(k);
                let h = spec.threshold(k);
                owner.iter().enumerate().filter(|(_, m)| under.contains(m)).map(|(i, _)| (i, targets[i] > h)).collect()
            })
            .collect();
        Partition { gates, experts }
    }

    pub fn counts(&self) -> NodeCounts {
        NodeCounts {
            gates: self
                .gates
                .iter()
                .map(|g| {
                    let hi = g.iter().filter(|(_, t)| *t).count();
                    (g.len() - hi, hi)
                })
                .collect(),
            experts: self.experts.iter().map(Vec::len).collect(),
        }
    }
}

/// Two-step training: every gate, then every expert, each on its own slice
/// of the standardized data.
pub fn train(samples: &[WindowSample], spec: &TreeSpec, config: &TrainConfig, seed: u64) -> Result<MoEModel> {
    train_with_provenance(samples, spec, config, seed, String::new())
}

pub fn train_with_provenance(
    samples: &[WindowSample],
    spec: &TreeSpec,
    config: &TrainConfig,
    seed: u64,
    provenance: String,
) -> Result<MoEModel> {
    if samples.is_empty() {
        return Err(invalid!("training set is empty"));
    }
    let targets: Vec<f64> = samples.iter().map(|s| s.target).collect();
    if let Some(i) = targets.iter().position(|y| !(*y >= 0.0 && y.is_finite())) {
        return Err(invalid!("sample {i} has invalid target {}", targets[i]));
    }
    let partition = Partition::compute(&targets, spec);
    for (m, members) in partition.experts.iter().enumerate() {
        if members.len() < 2 {
            let r = spec.expert_ranges()[m];
            return Err(Error::Training(alloc::format!(
                "expert e{} range [{}, {}) has {} training samples, needs at least 2",
                m + 1,
                r.lo,
                r.hi,
                members.len()
            )));
        }
    }

    let raw: Vec<&[f64]> = samples.iter().map(|s| &s.features[..]).collect();
    let (standardization, constant) = Standardization::fit(&raw)?;
    let mut warnings: Vec<TrainingWarning> =
        constant.into_iter().map(|dim| TrainingWarning::ConstantFeature { dim }).collect();
    let z: Vec<Vec<f64>> = raw.iter().map(|x| standardization.apply(x)).collect::<Result<_>>()?;

    let mut gates = Vec::with_capacity(spec.gate_count());
    for (g, members) in partition.gates.iter().enumerate() {
        let k = g + 1;
        let mut rows: Vec<(usize, bool)> = members.clone();
        let highs = rows.iter().filter(|(_, t)| *t).count();
        let lows = rows.len() - highs;
        if highs == 0 || lows == 0 {
            warnings.push(TrainingWarning::DegenerateGate { gate: k, label: highs > 0 });
        } else if config.balance_classes && highs != lows {
            let minority = highs < lows;
            let pool: Vec<(usize, bool)> = rows.iter().copied().filter(|(_, t)| *t == minority).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, k as u64));
            for _ in 0..highs.abs_diff(lows) {
                rows.push(pool[rng.random_range(0..pool.len())]);
            }
        }
        let x: Vec<&[f64]> = rows.iter().map(|(i, _)| &z[*i][..]).collect();
        let t: Vec<bool> = rows.iter().map(|(_, t)| *t).collect();
        let design = config.basis.design_matrix(&x)?;
        gates.push(fit_vb_logistic(&design, &t, config.basis, &config.gate).map_err(|e| node_error(e, "gate", k))?);
    }

    let mut experts = Vec::with_capacity(spec.expert_count());
    for (m, members) in partition.experts.iter().enumerate() {
        let x: Vec<&[f64]> = members.iter().map(|&i| &z[i][..]).collect();
        let t: Vec<f64> = members.iter().map(|&i| targets[i]).collect();
        let design = config.basis.design_matrix(&x)?;
        experts.push(
            fit_vb_linear(&design, &t, config.basis, &config.expert).map_err(|e| node_error(e, "expert", m + 1))?,
        );
    }

    let model = MoEModel {
        spec: spec.clone(),
        gates,
        experts,
        standardization,
        metadata: ModelMetadata { seed, config: *config, counts: partition.counts(), warnings, provenance },
    };
    model.validate()?;
    Ok(model)
}

fn node_error(e: Error, kind: &str, index: usize) -> Error {
    match e {
        Error::Numerical(msg) => Error::Numerical(alloc::format!("{kind} {index}: {msg}")),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn sample(f: f64, y: f64) -> WindowSample {
        let mut features = [0.0; 8];
        for (k, v) in features.iter_mut().enumerate() {
            *v = f * (k as f64 + 1.0) + libm::sin(3.0 * f + k as f64);
        }
        WindowSample {
            features,
            target: y,
            window: (0.0, 10.0),
            session: "t".to_string(),
            segment_id: 0,
            frames: 100,
            flagged: false,
        }
    }

    #[test]
    fn routing_follows_subtree_ranges() {
        let spec = TreeSpec::new(2, 0.0, 80.0, Some(&[20.0, 10.0, 40.0])).unwrap();
        let targets = [15.0, 5.0, 25.0, 50.0];
        let part = Partition::compute(&targets, &spec);
        let used_by_gate = |k: usize| part.gates[k - 1].iter().any(|(i, _)| *i == 0);
        assert!(used_by_gate(1) && used_by_gate(2) && !used_by_gate(3));
        assert!(part.gates[0].contains(&(0, false)));
        assert!(part.gates[1].contains(&(0, true)));
        let experts_with: alloc::vec::Vec<usize> = (0..4).filter(|&m| part.experts[m].contains(&0)).collect();
        assert_eq!(experts_with, alloc::vec![1]);
    }

    #[test]
    fn empty_expert_range_is_named() {
        let spec = TreeSpec::new(1, 0.0, 80.0, Some(&[20.0])).unwrap();
        let data: alloc::vec::Vec<_> = (0..6).map(|i| sample(i as f64, 5.0 + i as f64)).collect();
        match train(&data, &spec, &TrainConfig::default(), 1) {
            Err(Error::Training(msg)) => assert!(msg.contains("[20, 80)"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(train(&[], &spec, &TrainConfig::default(), 1).is_err());
    }

    #[test]
    fn depth_zero_trains_single_expert() {
        let spec = TreeSpec::new(0, 0.0, 80.0, None).unwrap();
        let data: alloc::vec::Vec<_> = (0..20).map(|i| sample(i as f64 * 0.1, 3.0 * i as f64)).collect();
        let model = train(&data, &spec, &TrainConfig::default(), 3).unwrap();
        assert!(model.gates.is_empty());
        assert_eq!(model.experts.len(), 1);
        assert_eq!(model.metadata.counts.experts, alloc::vec![20]);
    }

    #[test]
    fn training_is_deterministic() {
        let spec = TreeSpec::new(1, 0.0, 80.0, Some(&[20.0])).unwrap();
        let data: alloc::vec::Vec<_> = (0..30).map(|i| sample(i as f64 * 0.1, 1.5 * i as f64)).collect();
        let a = train(&data, &spec, &TrainConfig::default(), 9).unwrap();
        let b = train(&data, &spec, &TrainConfig::default(), 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.metadata.counts.gates, alloc::vec![(14, 16)]);
    }
}
