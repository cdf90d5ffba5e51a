//! Versioned dataset file of window samples.
//!
//! Three `#` metadata lines followed by a comma separated table with a
//! header row:
//!
//! ```text
//! # rainrate-dataset 1
//! # duration_s=10 stride_s=10 half_extent_m=10
//! # provenance=<single line of free text>
//! mu_n,sigma_n,mu_intensity,sigma_intensity,mu_radial,sigma_radial,mu_mst,sigma_mst,target_mm_h,window_start_s,window_end_s,frames,flagged,split,session,segment_id
//! ```
//!
//! `split` is `train` or `validation`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use rainrate_core::features::{WindowSample, FEATURE_DIM, FEATURE_NAMES};
use rainrate_core::pipeline::{Dataset, Split, WindowConfig};

use crate::atomic::write_atomic;
use crate::error::{CliError, CliResult};

pub const MAGIC: &str = "# rainrate-dataset";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    pub dataset: Dataset,
    pub provenance: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    mu_n: f64,
    sigma_n: f64,
    mu_intensity: f64,
    sigma_intensity: f64,
    mu_radial: f64,
    sigma_radial: f64,
    mu_mst: f64,
    sigma_mst: f64,
    target_mm_h: f64,
    window_start_s: f64,
    window_end_s: f64,
    frames: usize,
    flagged: bool,
    split: String,
    session: String,
    segment_id: i64,
}

impl Row {
    fn new(s: &WindowSample, split: Split) -> Self {
        let f = s.features;
        Row {
            mu_n: f[0],
            sigma_n: f[1],
            mu_intensity: f[2],
            sigma_intensity: f[3],
            mu_radial: f[4],
            sigma_radial: f[5],
            mu_mst: f[6],
            sigma_mst: f[7],
            target_mm_h: s.target,
            window_start_s: s.window.0,
            window_end_s: s.window.1,
            frames: s.frames,
            flagged: s.flagged,
            split: split.as_str().to_string(),
            session: s.session.clone(),
            segment_id: s.segment_id,
        }
    }

    fn into_sample(self) -> Result<(WindowSample, Split), String> {
        let split: Split = self.split.parse().map_err(|e: rainrate_core::Error| e.to_string())?;
        let features = [
            self.mu_n,
            self.sigma_n,
            self.mu_intensity,
            self.sigma_intensity,
            self.mu_radial,
            self.sigma_radial,
            self.mu_mst,
            self.sigma_mst,
        ];
        if features.iter().any(|v| !v.is_finite()) {
            return Err("features must be finite".into());
        }
        if !(self.target_mm_h >= 0.0 && self.target_mm_h.is_finite()) {
            return Err(format!("target {} must be a finite rate ≥ 0", self.target_mm_h));
        }
        if !(self.window_end_s > self.window_start_s) {
            return Err("window end must follow its start".into());
        }
        let sample = WindowSample {
            features,
            target: self.target_mm_h,
            window: (self.window_start_s, self.window_end_s),
            session: self.session,
            segment_id: self.segment_id,
            frames: self.frames,
            flagged: self.flagged,
        };
        Ok((sample, split))
    }
}

fn header() -> Vec<&'static str> {
    let mut h: Vec<&str> = FEATURE_NAMES.to_vec();
    h.extend(["target_mm_h", "window_start_s", "window_end_s", "frames", "flagged", "split", "session", "segment_id"]);
    h
}

pub fn write_dataset<W: Write>(mut w: W, file: &DatasetFile) -> std::io::Result<()> {
    let c = file.dataset.config;
    writeln!(w, "{MAGIC} {VERSION}")?;
    writeln!(w, "# duration_s={} stride_s={} half_extent_m={}", c.duration, c.stride, c.half_extent)?;
    writeln!(w, "# provenance={}", file.provenance.replace(['\n', '\r'], " "))?;
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(header())?;
    for (s, split) in file.dataset.samples.iter().zip(&file.dataset.splits) {
        out.serialize(Row::new(s, *split))?;
    }
    out.flush()
}

pub fn save_dataset(path: &Path, file: &DatasetFile) -> CliResult<()> {
    write_atomic(path, |w| write_dataset(w, file))
}

fn parse_config(line: &str) -> Result<WindowConfig, String> {
    let mut cfg = WindowConfig::default();
    let mut seen = [false; 3];
    for kv in line.split_whitespace() {
        let (k, v) = kv.split_once('=').ok_or_else(|| format!("expected key=value, got {kv:?}"))?;
        let v: f64 = v.parse().map_err(|e| format!("{k}: {e}"))?;
        match k {
            "duration_s" => (cfg.duration, seen[0]) = (v, true),
            "stride_s" => (cfg.stride, seen[1]) = (v, true),
            "half_extent_m" => (cfg.half_extent, seen[2]) = (v, true),
            _ => return Err(format!("unknown key {k:?}")),
        }
    }
    if seen != [true; 3] {
        return Err("config line needs duration_s, stride_s and half_extent_m".into());
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

pub fn parse_dataset(text: &str, path: &Path) -> CliResult<DatasetFile> {
    let mut lines = text.splitn(4, '\n');
    let mut meta = |n: usize, prefix: &str| -> CliResult<String> {
        let line = lines.next().unwrap_or("").trim_end_matches('\r');
        line.strip_prefix(prefix)
            .map(str::to_string)
            .ok_or_else(|| CliError::parse(path, n, format!("expected a line starting with {prefix:?}")))
    };
    let version = meta(1, MAGIC)?;
    if version.trim() != VERSION.to_string() {
        return Err(CliError::parse(
            path,
            1,
            format!("unsupported dataset version {:?}, expected {VERSION}", version.trim()),
        ));
    }
    let config = parse_config(&meta(2, "# ")?).map_err(|e| CliError::parse(path, 2, e))?;
    let provenance = meta(3, "# provenance=")?;
    let table = lines.next().unwrap_or("");
    let mut reader = csv::Reader::from_reader(table.as_bytes());
    let h = reader.headers().map_err(|e| CliError::parse(path, 4, e))?;
    if h.iter().collect::<Vec<_>>() != header() {
        return Err(CliError::parse(path, 4, format!("column header must be {}", header().join(","))));
    }
    let mut samples = Vec::new();
    let mut splits = Vec::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let line = i + 5;
        let row = row.map_err(|e| CliError::parse(path, line, e))?;
        let (s, split) = row.into_sample().map_err(|e| CliError::parse(path, line, e))?;
        samples.push(s);
        splits.push(split);
    }
    debug_assert_eq!(FEATURE_DIM, 8);
    Ok(DatasetFile { dataset: Dataset { samples, splits, config }, provenance })
}

pub fn load_dataset(path: &Path) -> CliResult<DatasetFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
    parse_dataset(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(i: usize) -> WindowSample {
        WindowSample {
            features: [i as f64, 0.5, 80.25, 1.0 / 3.0, 6.5, 0.1, 0.8, 0.05],
            target: 12.5 + i as f64,
            window: (10.0 * i as f64, 10.0 * i as f64 + 10.0),
            session: "synth-7".into(),
            segment_id: 1,
            frames: 100,
            flagged: i == 1,
        }
    }

    fn file() -> DatasetFile {
        let mut ds = Dataset::new((0..3).map(sample).collect(), WindowConfig::with_duration(10.0));
        ds.splits[2] = Split::Validation;
        DatasetFile { dataset: ds, provenance: "unit test".into() }
    }

    #[test]
    fn round_trip() {
        let f = file();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &f).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "# rainrate-dataset 1\n# duration_s=10 stride_s=10 half_extent_m=10\n# provenance=unit test\nmu_n,"
        ));
        assert_eq!(parse_dataset(&text, Path::new("d")).unwrap(), f);
    }

    #[test]
    fn empty_dataset_round_trips() {
        let f = DatasetFile { dataset: Dataset::new(vec![], WindowConfig::default()), provenance: String::new() };
        let mut buf = Vec::new();
        write_dataset(&mut buf, &f).unwrap();
        assert_eq!(parse_dataset(std::str::from_utf8(&buf).unwrap(), Path::new("d")).unwrap(), f);
    }

    #[test]
    fn rejects_wrong_version_and_rows() {
        let mut buf = Vec::new();
        write_dataset(&mut buf, &file()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let e = parse_dataset(&text.replacen("dataset 1", "dataset 2", 1), Path::new("d")).unwrap_err();
        assert!(e.message.contains("version"), "{}", e.message);
        let e = parse_dataset(&text.replacen(",validation,", ",test,", 1), Path::new("d")).unwrap_err();
        assert!(e.message.contains("d:7"), "{}", e.message);
        assert!(parse_dataset("garbage", Path::new("d")).is_err());
    }
}
