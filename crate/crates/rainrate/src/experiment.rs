//! Seeded end-to-end studies on synthetic sessions.
//!
//! A single seed fans out through `derive_seed` into the session that is
//! trained on, an independent held-out session and the training RNG.

use rainrate_core::features::{CropBox, ScanFeatures, WindowSample};
use rainrate_core::math::derive_seed;
use rainrate_core::moe::{
    default_thresholds, evaluate, train, ErrorMargin, EvaluationReport, MoEModel, TrainConfig, TreeSpec,
};
use rainrate_core::pipeline::{
    make_windows_from_features, measurement_volatility, prepare_ground_truth, split_validation, Dataset,
    GroundTruthConfig, RainSeries, SegmentSpan, Split, WindowConfig,
};
use rainrate_core::synth::{NoiseRegimeParams, RainProfile, SessionPlan};
use rainrate_core::Result;

use crate::featurize::{featurize_plan, SharedReference};

pub const SESSION_STREAM: u64 = 11;
pub const HOLDOUT_STREAM: u64 = 12;
pub const TRAIN_STREAM: u64 = 13;

/// Width of the central validation slice per segment, seconds.
pub const VALIDATION_SPAN: f64 = 20.0;
pub const Y_MAX: f64 = 80.0;

/// Per-scan statistics of one synthetic session plus its ground truth.
#[derive(Debug, Clone)]
pub struct FeaturizedSession {
    pub name: String,
    pub timestamps: Vec<f64>,
    pub scans: Vec<ScanFeatures>,
    pub raw: RainSeries,
    pub ground_truth: RainSeries,
    pub spans: Vec<SegmentSpan>,
}

impl FeaturizedSession {
    pub fn synthesize(
        name: &str,
        profile: &RainProfile,
        half_extent: f64,
        seed: u64,
        reference: &SharedReference,
    ) -> Result<Self> {
        let plan = SessionPlan::new(profile, &NoiseRegimeParams::default(), half_extent, seed)?;
        let bbox = CropBox::new(half_extent)?;
        let (timestamps, scans) = featurize_plan(&plan, &bbox, reference);
        let (ground_truth, _) = prepare_ground_truth(&plan.series, &GroundTruthConfig::default())?;
        let spans = plan.series.segment_spans();
        Ok(FeaturizedSession { name: name.into(), timestamps, scans, raw: plan.series, ground_truth, spans })
    }

    /// Windowed dataset with the central validation slices tagged.
    pub fn dataset(&self, config: &WindowConfig) -> Result<Dataset> {
        let w = make_windows_from_features(&self.timestamps, &self.scans, &self.ground_truth, config, &self.name)?;
        Ok(split_validation(&Dataset::new(w.samples, *config), &self.spans, VALIDATION_SPAN).0)
    }

    pub fn volatility(&self) -> Result<f64> {
        measurement_volatility(&self.ground_truth)
    }
}

/// The seed session and its independent held-out companion.
#[derive(Debug, Clone)]
pub struct Study {
    pub seed: u64,
    pub session: FeaturizedSession,
    pub holdout: FeaturizedSession,
    pub config: TrainConfig,
    pub margin: ErrorMargin,
    pub thresholds: Vec<f64>,
}

impl Study {
    /// Default profile, default crop box.
    pub fn new(seed: u64) -> Result<Self> {
        Self::with_profile(seed, &RainProfile::default())
    }

    pub fn with_profile(seed: u64, profile: &RainProfile) -> Result<Self> {
        let reference = SharedReference::default();
        let h = WindowConfig::default().half_extent;
        let session =
            FeaturizedSession::synthesize("session", profile, h, derive_seed(seed, SESSION_STREAM), &reference)?;
        let holdout =
            FeaturizedSession::synthesize("holdout", profile, h, derive_seed(seed, HOLDOUT_STREAM), &reference)?;
        Ok(Study {
            seed,
            session,
            holdout,
            config: TrainConfig::default(),
            margin: ErrorMargin::default(),
            thresholds: vec![0.25, 0.10],
        })
    }

    pub fn train_depth(&self, train_set: &[WindowSample], depth: usize) -> Result<MoEModel> {
        let thresholds = default_thresholds(depth);
        let spec = TreeSpec::new(depth, 0.0, Y_MAX, thresholds.as_deref())?;
        train(train_set, &spec, &self.config, derive_seed(self.seed, TRAIN_STREAM))
    }

    pub fn evaluate(&self, model: &MoEModel, samples: &[WindowSample]) -> Result<EvaluationReport> {
        evaluate(model, samples, &self.thresholds, &self.margin)
    }

    /// Depth 0 against depth 2 at 10 s windows, scored on the held-out session.
    pub fn depth_comparison(&self) -> Result<DepthComparison> {
        let config = WindowConfig::default();
        let train_set = self.session.dataset(&config)?.subset(Split::Train);
        let held_out = self.holdout.dataset(&config)?.samples;
        let shallow = self.evaluate(&self.train_depth(&train_set, 0)?, &held_out)?;
        let deep = self.evaluate(&self.train_depth(&train_set, 2)?, &held_out)?;
        Ok(DepthComparison { shallow, deep, volatility: self.session.volatility()? })
    }

    /// Depth-2 train RMSE for each window duration.
    pub fn duration_trend(&self, durations: &[f64]) -> Result<Vec<(f64, f64)>> {
        durations
            .iter()
            .map(|&d| {
                let train_set = self.session.dataset(&WindowConfig::with_duration(d))?.subset(Split::Train);
                let model = self.train_depth(&train_set, 2)?;
                Ok((d, self.evaluate(&model, &train_set)?.rmse_all))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthComparison {
    pub shallow: EvaluationReport,
    pub deep: EvaluationReport,
    /// Mean absolute rate change of the filtered ground truth, mm/h.
    pub volatility: f64,
}

/// Synthesize, featurize, train depth 2 and evaluate on the validation split.
pub fn run_pipeline(seed: u64, profile: &RainProfile) -> Result<EvaluationReport> {
    let reference = SharedReference::default();
    let config = WindowConfig::default();
    let session = FeaturizedSession::synthesize(
        "session",
        profile,
        config.half_extent,
        derive_seed(seed, SESSION_STREAM),
        &reference,
    )?;
    let dataset = session.dataset(&config)?;
    let spec = TreeSpec::new(2, 0.0, Y_MAX, default_thresholds(2).as_deref())?;
    let model = train(&dataset.subset(Split::Train), &spec, &TrainConfig::default(), derive_seed(seed, TRAIN_STREAM))?;
    evaluate(&model, &dataset.subset(Split::Validation), &[0.25, 0.10], &ErrorMargin::default())
}
