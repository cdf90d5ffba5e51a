//! `featurize`: scans plus disdrometer record into a windowed dataset.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use rainrate_core::features::{Scan, ScanFeatures};
use rainrate_core::pipeline::{
    make_windows_from_features, prepare_ground_truth, split_validation, Dataset, GroundTruthConfig, PipelineWarning,
    SkipCounts, Split, WindowConfig,
};

use crate::error::{CliError, CliResult};
use crate::featurize::{featurize_scans, SharedReference};
use crate::formats::dataset::{save_dataset, DatasetFile};
use crate::formats::disdrometer::load_series;
use crate::formats::scan::ScanReader;

/// Scans featurized per parallel batch; bounds memory on long recordings.
const BATCH: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct FeaturizeSummary {
    pub scans: usize,
    pub candidates: usize,
    pub skipped: SkipCounts,
    pub samples: usize,
    pub validation: usize,
    pub warnings: Vec<String>,
}

pub fn describe(w: &PipelineWarning) -> String {
    match w {
        PipelineWarning::SegmentDropped { segment_id, len } => {
            format!("segment {segment_id} dropped: {len} disdrometer samples are too few to smooth and trim")
        }
        PipelineWarning::ShortValidationSegment { segment_id, duration } => {
            format!(
                "segment {segment_id} ({duration} s) is too short for a validation slice; all of it is training data"
            )
        }
    }
}

pub fn run(
    scans: &Path,
    disdrometer: &Path,
    out: &Path,
    config: &WindowConfig,
    validation_span: f64,
    session: &str,
) -> CliResult<FeaturizeSummary> {
    config.validate()?;
    if !(validation_span > 0.0 && validation_span.is_finite()) {
        return Err(CliError::usage(format!("validation span must be positive, got {validation_span}")));
    }
    let bbox = config.crop_box()?;
    let raw = load_series(disdrometer)?;
    let reference = SharedReference::default();

    let file = File::open(scans).map_err(|e| CliError::file(scans, e))?;
    let mut timestamps = Vec::new();
    let mut features: Vec<ScanFeatures> = Vec::new();
    let mut batch: Vec<Scan> = Vec::with_capacity(BATCH);
    let mut flush = |batch: &mut Vec<Scan>| {
        timestamps.extend(batch.iter().map(|s| s.timestamp));
        features.extend(featurize_scans(batch, &bbox, &reference));
        batch.clear();
    };
    for scan in ScanReader::new(BufReader::new(file), scans) {
        batch.push(scan?);
        if batch.len() == BATCH {
            flush(&mut batch);
        }
    }
    flush(&mut batch);

    let provenance = format!(
        "featurize scans={} disdrometer={} duration_s={} stride_s={} half_extent_m={} validation_span_s={validation_span}",
        scans.display(),
        disdrometer.display(),
        config.duration,
        config.stride,
        config.half_extent
    );
    let mut warnings = Vec::new();
    let (dataset, windowing) = if timestamps.is_empty() {
        warnings.push(format!("{} contains no scans; writing an empty dataset", scans.display()));
        (Dataset::new(Vec::new(), *config), None)
    } else {
        let (truth, w1) = prepare_ground_truth(&raw, &GroundTruthConfig::default())?;
        let windowing = make_windows_from_features(&timestamps, &features, &truth, config, session)?;
        let (dataset, w2) =
            split_validation(&Dataset::new(windowing.samples.clone(), *config), &raw.segment_spans(), validation_span);
        warnings.extend(w1.iter().chain(&w2).map(describe));
        (dataset, Some(windowing))
    };
    let summary = FeaturizeSummary {
        scans: timestamps.len(),
        candidates: windowing.as_ref().map_or(0, |w| w.candidates),
        skipped: windowing.as_ref().map_or(SkipCounts::default(), |w| w.skipped),
        samples: dataset.len(),
        validation: dataset.splits.iter().filter(|s| **s == Split::Validation).count(),
        warnings,
    };
    save_dataset(out, &DatasetFile { dataset, provenance })?;
    Ok(summary)
}
