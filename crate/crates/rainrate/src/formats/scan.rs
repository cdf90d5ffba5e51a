//! Scan record text format.
//!
//! One scan per line, fields separated by a single `,`, no spaces, no
//! header, every line terminated by `\n`:
//!
//! ```text
//! frame_id,timestamp,x1,y1,z1,i1,x2,y2,z2,i2,...
//! ```
//!
//! `frame_id` is an unsigned decimal integer. Every other field is an `f64`
//! written in Rust's shortest round-trip decimal form (`3`, `0.25`,
//! `-1.5e-7` is written `-0.00000015`), so a write/read cycle is lossless.
//! A scan without points is just `frame_id,timestamp`. Readers also accept
//! `\r\n` line ends and any decimal or exponent float syntax.

use std::io::{BufRead, Write};
use std::path::Path;

use rainrate_core::features::{Point, Scan};

use crate::error::{CliError, CliResult};

pub fn write_scan<W: Write + ?Sized>(w: &mut W, scan: &Scan) -> std::io::Result<()> {
    write!(w, "{},{}", scan.frame_id, scan.timestamp)?;
    for p in &scan.points {
        write!(w, ",{},{},{},{}", p.x, p.y, p.z, p.intensity)?;
    }
    w.write_all(b"\n")
}

pub fn parse_scan(line: &str) -> Result<Scan, String> {
    let line = line.strip_suffix('\r').unwrap_or(line);
    let mut fields = line.split(',');
    let frame_id = fields
        .next()
        .filter(|f| !f.is_empty())
        .ok_or("empty record")?
        .parse::<u64>()
        .map_err(|e| format!("frame_id: {e}"))?;
    let timestamp = parse_f64(fields.next().ok_or("missing timestamp")?, "timestamp")?;
    let rest: Vec<&str> = fields.collect();
    if rest.len() % 4 != 0 {
        return Err(format!("{} point fields is not a multiple of 4 (x,y,z,intensity)", rest.len()));
    }
    let points = rest
        .chunks_exact(4)
        .map(|c| {
            Ok(Point::new(
                parse_f64(c[0], "x")?,
                parse_f64(c[1], "y")?,
                parse_f64(c[2], "z")?,
                parse_f64(c[3], "intensity")?,
            ))
        })
        .collect::<Result<Vec<_>, String>>()?;
    let scan = Scan { frame_id, timestamp, points };
    scan.validate().map_err(|e| e.to_string())?;
    Ok(scan)
}

fn parse_f64(s: &str, what: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|e| format!("{what} {s:?}: {e}"))
}

/// Streams scans from a reader; `path` only labels errors.
pub struct ScanReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    path: std::path::PathBuf,
}

impl<R: BufRead> ScanReader<R> {
    pub fn new(reader: R, path: &Path) -> Self {
        ScanReader { lines: reader.lines(), line_no: 0, path: path.to_path_buf() }
    }
}

impl<R: BufRead> Iterator for ScanReader<R> {
    type Item = CliResult<Scan>;

    fn next(&mut self) -> Option<Self::Item> {
        let line = match self.lines.next()? {
            Ok(l) => l,
            Err(e) => return Some(Err(CliError::file(&self.path, e))),
        };
        self.line_no += 1;
        Some(parse_scan(&line).map_err(|e| CliError::parse(&self.path, self.line_no, e)))
    }
}

pub fn read_scans(path: &Path) -> CliResult<Vec<Scan>> {
    let file = std::fs::File::open(path).map_err(|e| CliError::file(path, e))?;
    ScanReader::new(std::io::BufReader::new(file), path).collect()
}
