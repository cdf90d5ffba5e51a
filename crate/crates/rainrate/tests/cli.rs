use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::{DMatrix, DVector};
use serde_json::Value;
use tempfile::TempDir;

use rainrate::commands::evaluate::evaluate_dataset;
use rainrate::commands::synth::parse_segment;
use rainrate::commands::tree_spec;
use rainrate::experiment::SESSION_STREAM;
use rainrate::formats::dataset::load_dataset;
use rainrate::formats::model::save_model;
use rainrate::formats::scan::read_scans;
use rainrate_core::bayes::{Basis, ExpertPosterior, FitDiagnostics};
use rainrate_core::features::{Standardization, WindowSample};
use rainrate_core::math::derive_seed;
use rainrate_core::moe::{default_thresholds, ErrorMargin, MoEModel, ModelMetadata, NodeCounts, TrainConfig, TreeSpec};
use rainrate_core::pipeline::{Dataset, WindowConfig};
use rainrate_core::synth::{NoiseRegimeParams, RainProfile, SessionPlan};

fn rainrate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rainrate")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = rainrate(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small two-segment session on disk: 8 then 30 mm/h, 300 s each.
struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = TempDir::new().unwrap();
        let f = Fixture { dir };
        ok(&[
            "synth",
            "--scans",
            s(&f.path("scans.txt")),
            "--disdrometer",
            s(&f.path("disdro.csv")),
            "--segments",
            "8:300:60,30:300:60",
            "--box",
            "5",
        ]);
        ok(&[
            "featurize",
            "--scans",
            s(&f.path("scans.txt")),
            "--disdrometer",
            s(&f.path("disdro.csv")),
            "--out",
            s(&f.path("data.csv")),
            "--box",
            "5",
        ]);
        f
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn train(&self, out: &str, extra: &[&str]) -> Output {
        let (data, out) = (self.path("data.csv"), self.path(out));
        let mut args = vec!["train", "--data", s(&data), "--out", s(&out)];
        args.extend_from_slice(extra);
        rainrate(&args)
    }
}

#[test]
fn exit_codes_by_failure_class() {
    assert_eq!(code(&rainrate(&[])), 2);
    assert_eq!(code(&rainrate(&["--help"])), 0);
    assert_eq!(code(&rainrate(&["--version"])), 0);
    assert_eq!(code(&rainrate(&["train", "--bogus"])), 2);

    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.csv");
    let out = dir.path().join("m.json");
    let r = rainrate(&["train", "--data", s(&missing), "--out", s(&out)]);
    assert_eq!(code(&r), 3);
    assert!(String::from_utf8_lossy(&r.stderr).contains("missing.csv"));

    let junk = dir.path().join("junk.csv");
    fs::write(&junk, "not a dataset\n").unwrap();
    assert_eq!(code(&rainrate(&["train", "--data", s(&junk), "--out", s(&out)])), 3);

    let r =
        rainrate(&["featurize", "--scans", s(&junk), "--disdrometer", s(&junk), "--out", s(&out), "--duration", "-1"]);
    assert_eq!(code(&r), 2);
}

#[test]
fn bench_requires_a_model_path() {
    assert_eq!(code(&rainrate(&["bench", "--model", ""])), 2);
    assert_eq!(code(&rainrate(&["bench"])), 2);
}

#[test]
fn synth_files_round_trip_and_repeat() {
    let dir = TempDir::new().unwrap();
    let run = |tag: &str| {
        let (scans, disdro) = (dir.path().join(format!("{tag}.txt")), dir.path().join(format!("{tag}.csv")));
        ok(&["synth", "--scans", s(&scans), "--disdrometer", s(&disdro), "--segments", "12:30", "--seed", "3"]);
        (scans, disdro)
    };
    let (a_scans, a_dis) = run("a");
    let (b_scans, b_dis) = run("b");
    assert_eq!(fs::read(&a_scans).unwrap(), fs::read(&b_scans).unwrap());
    assert_eq!(fs::read(&a_dis).unwrap(), fs::read(&b_dis).unwrap());

    let profile = RainProfile { segments: vec![parse_segment("12:30").unwrap()], ..Default::default() };
    let plan = SessionPlan::new(&profile, &NoiseRegimeParams::default(), 10.0, derive_seed(3, SESSION_STREAM)).unwrap();
    let read = read_scans(&a_scans).unwrap();
    assert_eq!(read.len(), 300);
    for (i, scan) in read.iter().enumerate().step_by(37) {
        assert_eq!(scan, &plan.scan(i));
    }
    let series = rainrate::formats::disdrometer::load_series(&a_dis).unwrap();
    assert_eq!(series, plan.series);
}

#[test]
fn default_session_has_15000_frames() {
    let plan = SessionPlan::new(&RainProfile::default(), &NoiseRegimeParams::default(), 10.0, 1).unwrap();
    assert_eq!(plan.frame_count(), 15_000);
}

#[test]
fn featurize_reports_100_frame_windows() {
    let f = Fixture::new();
    let data = load_dataset(&f.path("data.csv")).unwrap().dataset;
    assert!(!data.is_empty());
    assert!(data.samples.iter().all(|x| x.frames == 100));

    let config = WindowConfig { half_extent: 5.0, ..Default::default() };
    let again = f.path("again.csv");
    let summary =
        rainrate::commands::featurize::run(&f.path("scans.txt"), &f.path("disdro.csv"), &again, &config, 20.0, "s")
            .unwrap();
    assert_eq!(summary.samples, summary.candidates - summary.skipped.total());
    assert_eq!(load_dataset(&again).unwrap().dataset.len(), summary.samples);
    assert_eq!(summary.samples, data.len());
}

#[test]
fn empty_scan_file_gives_empty_dataset() {
    let f = Fixture::new();
    let empty = f.path("empty.txt");
    fs::write(&empty, "").unwrap();
    let out = ok(&[
        "featurize",
        "--scans",
        s(&empty),
        "--disdrometer",
        s(&f.path("disdro.csv")),
        "--out",
        s(&f.path("e.csv")),
    ]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    assert!(load_dataset(&f.path("e.csv")).unwrap().dataset.is_empty());
}

#[test]
fn retraining_is_bit_identical() {
    let f = Fixture::new();
    assert!(f.train("m1.json", &["--depth", "1", "--thresholds", "20"]).status.success());
    assert!(f.train("m2.json", &["--depth", "1", "--thresholds", "20"]).status.success());
    assert_eq!(fs::read(f.path("m1.json")).unwrap(), fs::read(f.path("m2.json")).unwrap());
}

#[test]
fn conflicting_depth_is_a_usage_error() {
    let f = Fixture::new();
    assert_eq!(code(&f.train("m.json", &["--depth", "2", "--thresholds", "20"])), 2);
    assert_eq!(code(&f.train("m.json", &["--thresholds", "20,10"])), 2);
}

#[test]
fn published_threshold_sets_are_accepted() {
    let two = tree_spec(Some(2), None, 80.0).unwrap();
    assert_eq!(two.thresholds(), &[20.0, 10.0, 40.0]);
    let four = default_thresholds(4).unwrap();
    let spec = tree_spec(None, Some(&four), 80.0).unwrap();
    assert_eq!(spec.depth(), 4);
    assert_eq!(spec.expert_count(), 16);
    let mut sorted = four.clone();
    sorted.sort_by(f64::total_cmp);
    assert_eq!(sorted.first(), Some(&2.5));
    assert_eq!(sorted.last(), Some(&70.0));
}

#[test]
fn evaluate_writes_report_and_plot_rows() {
    let f = Fixture::new();
    assert!(f
        .train("m.json", &["--depth", "1", "--thresholds", "20", "--report", s(&f.path("train.json"))])
        .status
        .success());
    let train_report: Value = serde_json::from_str(&fs::read_to_string(f.path("train.json")).unwrap()).unwrap();
    assert!(train_report.get("warnings").is_some());

    let out = ok(&[
        "evaluate",
        "--model",
        s(&f.path("m.json")),
        "--data",
        s(&f.path("data.csv")),
        "--report",
        s(&f.path("eval.json")),
        "--plot",
        s(&f.path("plot.csv")),
    ]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("rmse"));
    let report: Value = serde_json::from_str(&fs::read_to_string(f.path("eval.json")).unwrap()).unwrap();
    for key in ["rmse_all", "mean_error_probability", "filtered"] {
        assert!(report["all"].get(key).is_some(), "report lacks {key}: {report}");
    }
    assert!(report["splits"]["train"]["rmse_all"].is_f64() && report["splits"]["validation"]["rmse_all"].is_f64());
    let filtered = report["all"]["filtered"].as_array().unwrap();
    assert_eq!(filtered.len(), 2);
    assert!(filtered.iter().all(|m| m.get("rmse").is_some() && m.get("retention").is_some()));

    let rows = load_dataset(&f.path("data.csv")).unwrap().dataset.len();
    let mut plot = csv::Reader::from_path(f.path("plot.csv")).unwrap();
    let header: Vec<String> = plot.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, rainrate::commands::evaluate::PLOT_HEADER);
    assert_eq!(plot.records().count(), rows);
}

/// Depth-0 model whose single expert reproduces the target exactly:
/// target = 2 * feature[0] + 1 with negligible posterior spread.
fn perfect_model(dim: usize) -> MoEModel {
    let spec = TreeSpec::new(0, 0.0, 80.0, None).unwrap();
    let mut mean = DVector::zeros(dim + 1);
    mean[0] = 1.0;
    mean[1] = 2.0;
    MoEModel {
        spec,
        gates: vec![],
        experts: vec![ExpertPosterior {
            mean,
            covariance: DMatrix::identity(dim + 1, dim + 1) * 1e-16,
            noise_precision: 1e16,
            weight_precision: 1.0,
            basis: Basis::LinearWithBias,
            diagnostics: FitDiagnostics { iterations: 1, converged: true, lower_bounds: vec![0.0] },
        }],
        standardization: Standardization { mean: vec![0.0; dim], scale: vec![1.0; dim] },
        metadata: ModelMetadata {
            seed: 0,
            config: TrainConfig::default(),
            counts: NodeCounts { gates: vec![], experts: vec![1] },
            warnings: vec![],
            provenance: "stub".into(),
        },
    }
}

#[test]
fn perfect_model_scores_zero() {
    let samples: Vec<WindowSample> = (0..20)
        .map(|i| {
            let mut features = [0.5; 8];
            features[0] = i as f64;
            WindowSample {
                features,
                target: 2.0 * i as f64 + 1.0,
                window: (10.0 * i as f64, 10.0 * (i + 1) as f64),
                session: "stub".into(),
                segment_id: 0,
                frames: 100,
                flagged: false,
            }
        })
        .collect();
    let data = Dataset::new(samples, WindowConfig::default());
    let eval = evaluate_dataset(&perfect_model(8), &data, &[0.25, 0.10], &ErrorMargin::default()).unwrap();
    assert!(eval.all.rmse_all < 1e-9);
    for m in &eval.all.filtered {
        assert_eq!(m.retention, 1.0);
        assert!(m.rmse.unwrap() < 1e-9);
    }
}

#[test]
fn predict_streams_at_one_hertz() {
    let f = Fixture::new();
    assert!(f.train("m.json", &["--depth", "1", "--thresholds", "20"]).status.success());
    let out = ok(&["predict", "--model", s(&f.path("m.json")), "--scans", s(&f.path("scans.txt")), "--box", "5"]);
    let lines: Vec<Value> =
        String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    // 600 s stream, 10 s buffer, 1 s cadence
    assert_eq!(lines.len(), 591);
    for w in lines.windows(2) {
        let dt = w[1]["time_s"].as_f64().unwrap() - w[0]["time_s"].as_f64().unwrap();
        assert!((dt - 1.0).abs() < 1e-9);
    }
    for l in &lines {
        assert_eq!(l["frames"].as_u64(), Some(100));
        assert!(l["point_estimate_mm_h"].is_f64());
        let p = l["error_probability"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&p));
        let r: f64 = l["responsibilities"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum();
        assert!((r - 1.0).abs() < 1e-9);
    }
}

#[test]
fn predict_names_both_dimensions_on_mismatch() {
    let f = Fixture::new();
    save_model(&f.path("narrow.json"), &perfect_model(3)).unwrap();
    let out = rainrate(&["predict", "--model", s(&f.path("narrow.json")), "--scans", s(&f.path("scans.txt"))]);
    assert_eq!(code(&out), 2);
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains('3') && msg.contains('8'), "{msg}");
}
