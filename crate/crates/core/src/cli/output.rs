//! CSV and JSON result writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use super::experiment::{ExperimentResult, ResultRow};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 11] = [
    "sweep_var",
    "sweep_value",
    "slot",
    "group",
    "case",
    "scheme",
    "mode",
    "p_analytic",
    "p_mc",
    "ci_half",
    "diag",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown format {other:?}, expected csv or json"))),
        }
    }
}

/// Ten significant digits in scientific notation.
pub fn format_number(x: f64) -> String {
    format!("{x:.9e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(format_number).unwrap_or_default()
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source }
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.sweep_var.clone(),
            format_number(r.sweep_value),
            r.slot.to_string(),
            r.group.to_string(),
            r.case.clone(),
            r.scheme.clone(),
            r.mode.clone(),
            opt(r.p_analytic),
            opt(r.p_mc),
            opt(r.ci_half),
            r.diag.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(rows: &[ResultRow], mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, rows)?;
    out.write_all(b"\n").map_err(|e| Error::Json(serde_json::Error::io(e)))?;
    Ok(())
}

/// Writes to any writer; `origin` names it in error messages.
pub fn write_results_to<W: Write>(result: &ExperimentResult, format: Format, out: W, origin: &Path) -> Result<()> {
    match format {
        Format::Csv => write_csv(&result.rows, out).map_err(|e| io_err(origin, std::io::Error::other(e))),
        Format::Json => write_json(&result.rows, out),
    }
}

pub fn write_results(result: &ExperimentResult, format: Format, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    write_results_to(result, format, &mut w, path)?;
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_json(path: &Path) -> Result<Vec<ResultRow>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}
