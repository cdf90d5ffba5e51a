//! Command-line interface.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use rainrate_core::features::CropBox;
use rainrate_core::moe::ErrorMargin;
use rainrate_core::pipeline::WindowConfig;
use rainrate_core::synth::SegmentPlan;

use crate::atomic::write_atomic;
use crate::commands::{self, bench, evaluate, featurize, predict, synth, train};
use crate::error::{CliError, CliResult};
use crate::formats::dataset::load_dataset;
use crate::formats::model::load_model;
use crate::formats::scan::ScanReader;

#[derive(Debug, Parser)]
#[command(name = "rainrate", version, about = "Rainfall-rate estimation from lidar noise point clouds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic session: scan file plus disdrometer record.
    Synth(SynthArgs),
    /// Window a scan file against a disdrometer record into a dataset.
    Featurize(FeaturizeArgs),
    /// Train a model on the train split of a dataset.
    Train(TrainArgs),
    /// Score a model on a dataset.
    Evaluate(EvaluateArgs),
    /// Stream predictions over a scan file.
    Predict(PredictArgs),
    /// Time inference and featurization.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SeedArg {
    /// Master seed; every random stream is derived from it.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BoxArg {
    /// Crop box half extent, metres.
    #[arg(long = "box", default_value_t = 10.0)]
    pub half_extent: f64,
}

#[derive(Debug, Args)]
pub struct ScoringArgs {
    /// Error-probability filter thresholds.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.25, 0.10])]
    pub error_prob_thresholds: Vec<f64>,
    /// Relative half-width of the error band around the point estimate.
    #[arg(long, default_value_t = 0.05)]
    pub margin: f64,
    /// Minimum absolute half-width of the error band, mm/h.
    #[arg(long, default_value_t = 0.0)]
    pub margin_floor: f64,
}

impl ScoringArgs {
    fn margin(&self) -> CliResult<ErrorMargin> {
        let m = ErrorMargin { fraction: self.margin, floor: self.margin_floor };
        m.validate()?;
        Ok(m)
    }

    fn thresholds(&self) -> CliResult<&[f64]> {
        if let Some(t) = self.error_prob_thresholds.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return Err(CliError::usage(format!("error-probability threshold {t} is outside (0, 1]")));
        }
        Ok(&self.error_prob_thresholds)
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output scan file.
    #[arg(long)]
    pub scans: PathBuf,
    /// Output disdrometer CSV.
    #[arg(long)]
    pub disdrometer: PathBuf,
    /// Segments as RATE:DURATION[:RAMP], comma separated (default: 15/30/50 mm/h, 500 s each).
    #[arg(long, value_delimiter = ',', value_parser = synth::parse_segment)]
    pub segments: Option<Vec<SegmentPlan>>,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub bbox: BoxArg,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[arg(long)]
    pub scans: PathBuf,
    #[arg(long)]
    pub disdrometer: PathBuf,
    /// Output dataset file.
    #[arg(long)]
    pub out: PathBuf,
    /// Window duration, seconds.
    #[arg(long, default_value_t = 10.0)]
    pub duration: f64,
    /// Start-to-start window spacing, seconds (default: the duration).
    #[arg(long)]
    pub stride: Option<f64>,
    /// Width of the central validation slice per segment, seconds.
    #[arg(long, default_value_t = crate::experiment::VALIDATION_SPAN)]
    pub validation_span: f64,
    /// Session label stored on every row (default: scan file stem).
    #[arg(long)]
    pub session: Option<String>,
    #[command(flatten)]
    pub bbox: BoxArg,
}

#[derive(Debug, Args)]
pub struct TreeArgs {
    /// Tree depth; 0 is a single expert.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Gate thresholds in heap order (root first), mm/h.
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
    /// Upper end of the modelled rate range, mm/h.
    #[arg(long, default_value_t = crate::experiment::Y_MAX)]
    pub y_max: f64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Output model file.
    #[arg(long)]
    pub out: PathBuf,
    /// Training report (JSON).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Use validation rows for training too.
    #[arg(long)]
    pub all_splits: bool,
    #[command(flatten)]
    pub tree: TreeArgs,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub scoring: ScoringArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Machine-readable report (JSON).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Per-sample plot data (CSV).
    #[arg(long)]
    pub plot: Option<PathBuf>,
    #[command(flatten)]
    pub scoring: ScoringArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub scans: PathBuf,
    /// JSON-lines output (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sliding buffer length, seconds.
    #[arg(long, default_value_t = 10.0)]
    pub buffer: f64,
    /// Emission interval, seconds.
    #[arg(long, default_value_t = 1.0)]
    pub cadence: f64,
    #[arg(long, default_value_t = 0.05)]
    pub margin: f64,
    #[command(flatten)]
    pub bbox: BoxArg,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Inference repetitions.
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    /// Featurization repetitions.
    #[arg(long, default_value_t = 5)]
    pub featurize_reps: usize,
    /// Points in the featurization scan.
    #[arg(long, default_value_t = 2093)]
    pub points: usize,
    /// JSON report (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub bbox: BoxArg,
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "session".to_string(), |s| s.to_string_lossy().into_owned())
}

fn write_json(path: Option<&Path>, value: &serde_json::Value, stdout: &mut dyn Write) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    match path {
        Some(p) => write_atomic(p, |w| writeln!(w, "{text}")),
        None => writeln!(stdout, "{text}").map_err(|e| CliError::io(format!("stdout: {e}"))),
    }
}

/// Run one command; human-readable output goes to `stdout`, diagnostics to `stderr`.
pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    let io = |e: std::io::Error| CliError::io(format!("console: {e}"));
    match cli.command {
        Command::Synth(a) => {
            let opts = synth::SynthOptions { seed: a.seed.seed, half_extent: a.bbox.half_extent, segments: a.segments };
            let s = synth::run(&a.scans, &a.disdrometer, &opts)?;
            writeln!(
                stderr,
                "wrote {} scans ({} points) and {} disdrometer samples",
                s.scans, s.points, s.disdrometer_samples
            )
            .map_err(io)?;
        }
        Command::Featurize(a) => {
            let config = WindowConfig {
                duration: a.duration,
                stride: a.stride.unwrap_or(a.duration),
                half_extent: a.bbox.half_extent,
            };
            let session = a.session.unwrap_or_else(|| stem(&a.scans));
            let s = featurize::run(&a.scans, &a.disdrometer, &a.out, &config, a.validation_span, &session)?;
            for w in &s.warnings {
                writeln!(stderr, "warning: {w}").map_err(io)?;
            }
            writeln!(
                stderr,
                "{} scans, {} candidate windows: {} samples ({} validation), {} without a single-segment target, {} with fewer than 2 scans",
                s.scans, s.candidates, s.samples, s.validation, s.skipped.no_target, s.skipped.too_few_scans
            )
            .map_err(io)?;
        }
        Command::Train(a) => {
            let spec = commands::tree_spec(a.tree.depth, a.tree.thresholds.as_deref(), a.tree.y_max)?;
            let opts = train::TrainOptions {
                spec,
                seed: a.seed.seed,
                all_splits: a.all_splits,
                thresholds: a.scoring.thresholds()?.to_vec(),
                margin: a.scoring.margin()?,
            };
            let (model, _) = train::run(&a.data, &a.out, a.report.as_deref(), &opts)?;
            for w in &model.metadata.warnings {
                writeln!(stderr, "warning: {}", train::describe(w)).map_err(io)?;
            }
            writeln!(
                stderr,
                "trained depth-{} model ({} gates, {} experts) on {} rows",
                model.spec.depth(),
                model.gates.len(),
                model.experts.len(),
                model.metadata.counts.experts.iter().sum::<usize>()
            )
            .map_err(io)?;
        }
        Command::Evaluate(a) => {
            let thresholds = a.scoring.thresholds()?;
            let margin = a.scoring.margin()?;
            let model = load_model(&a.model)?;
            let file = load_dataset(&a.data)?;
            let eval = evaluate::evaluate_dataset(&model, &file.dataset, thresholds, &margin)?;
            writeln!(stdout, "{}", eval.table(thresholds)).map_err(io)?;
            if let Some(p) = &a.report {
                let mut v = eval.to_json(thresholds, &margin);
                v["model"] = a.model.display().to_string().into();
                v["data"] = a.data.display().to_string().into();
                write_json(Some(p), &v, stdout)?;
            }
            if let Some(p) = &a.plot {
                evaluate::write_plot_data(p, &file.dataset, &eval)?;
            }
        }
        Command::Predict(a) => {
            let model = load_model(&a.model)?;
            let bbox = CropBox::new(a.bbox.half_extent)?;
            let margin = ErrorMargin { fraction: a.margin, ..ErrorMargin::default() };
            let mut p = predict::StreamPredictor::new(&model, bbox, a.buffer, a.cadence, margin)?;
            let file = File::open(&a.scans).map_err(|e| CliError::file(&a.scans, e))?;
            let mut lines = Vec::new();
            let emit = |es: Vec<predict::Emission>, lines: &mut Vec<String>, out: &mut dyn Write| -> CliResult<()> {
                for e in es {
                    let line = e.to_json().to_string();
                    if a.out.is_some() {
                        lines.push(line);
                    } else {
                        writeln!(out, "{line}").map_err(io)?;
                    }
                }
                Ok(())
            };
            for scan in ScanReader::new(BufReader::new(file), &a.scans) {
                let es = p.push(&scan?)?;
                emit(es, &mut lines, stdout)?;
            }
            let es = p.finish()?;
            emit(es, &mut lines, stdout)?;
            if let Some(path) = &a.out {
                write_atomic(path, |w| lines.iter().try_for_each(|l| writeln!(w, "{l}")))?;
            }
            if p.skipped > 0 {
                writeln!(stderr, "warning: {} emissions skipped, buffer held fewer than 2 scans", p.skipped)
                    .map_err(io)?;
            }
        }
        Command::Bench(a) => {
            let path = a
                .model
                .filter(|p| !p.as_os_str().is_empty())
                .ok_or_else(|| CliError::usage("bench needs a non-empty --model path"))?;
            let model = load_model(&path)?;
            let opts = bench::BenchOptions {
                reps: a.reps,
                featurize_reps: a.featurize_reps,
                points: a.points,
                half_extent: a.bbox.half_extent,
                seed: a.seed.seed,
            };
            let report = bench::run(&model, &opts)?;
            write_json(a.out.as_deref(), &report.to_json(), stdout)?;
            writeln!(
                stderr,
                "inference mean {:.3} ms (p95 {:.3}); featurization of {} points mean {:.1} ms; {}",
                report.inference.mean_ms,
                report.inference.p95_ms,
                report.points,
                report.featurization.mean_ms,
                if report.within_budget() { "within budget" } else { "OVER BUDGET" }
            )
            .map_err(io)?;
        }
    }
    Ok(())
}
