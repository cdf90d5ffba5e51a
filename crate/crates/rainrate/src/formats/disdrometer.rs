//! Disdrometer track as delimited text.
//!
//! Comma separated with the header row `timestamp_s,rate_mm_h,segment_id`,
//! one measurement per row in time order.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use rainrate_core::pipeline::RainSeries;

use crate::atomic::write_atomic;
use crate::error::{CliError, CliResult};

pub const HEADER: [&str; 3] = ["timestamp_s", "rate_mm_h", "segment_id"];

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    timestamp_s: f64,
    rate_mm_h: f64,
    segment_id: i64,
}

pub fn write_series<W: Write>(w: W, series: &RainSeries) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for i in 0..series.len() {
        out.serialize(Row {
            timestamp_s: series.timestamps[i],
            rate_mm_h: series.rates[i],
            segment_id: series.segment_ids[i],
        })?;
    }
    out.flush()
}

pub fn save_series(path: &Path, series: &RainSeries) -> CliResult<()> {
    write_atomic(path, |w| write_series(w, series))
}

pub fn parse_series<R: std::io::Read>(r: R, path: &Path) -> CliResult<RainSeries> {
    let mut reader = csv::Reader::from_reader(r);
    let headers = reader.headers().map_err(|e| CliError::parse(path, 1, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(CliError::parse(path, 1, format!("header must be {}", HEADER.join(","))));
    }
    let mut series = RainSeries::empty();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| CliError::parse(path, i + 2, e))?;
        series.timestamps.push(row.timestamp_s);
        series.rates.push(row.rate_mm_h);
        series.segment_ids.push(row.segment_id);
    }
    series.validate().map_err(|e| CliError::file(path, e))?;
    Ok(series)
}

pub fn load_series(path: &Path) -> CliResult<RainSeries> {
    let file = std::fs::File::open(path).map_err(|e| CliError::file(path, e))?;
    parse_series(std::io::BufReader::new(file), path)
}
