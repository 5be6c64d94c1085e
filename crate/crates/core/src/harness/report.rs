//! CSV and JSON renderings of a [`RunReport`].

use std::io::Write;

use serde::Serialize;

use super::RunReport;
use crate::error::{Error, Result};

/// Bumped whenever a field is renamed or removed.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidExperiment(format!("unknown format '{other}'"))),
        }
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    schema_version: u32,
    expression: &'a str,
    algorithm: &'a str,
    p: f64,
    reps: u64,
    truncated: u64,
    mean_y: f64,
    mean_y_lo: f64,
    mean_y_hi: f64,
    f: Option<f64>,
    f_error: Option<f64>,
    mean_n: f64,
    mean_n_lo: f64,
    mean_n_hi: f64,
    sd_n: f64,
    expected_n: Option<f64>,
    expected_n_error: Option<f64>,
    mean_outer: f64,
    mean_uniforms: f64,
    mean_pairs: f64,
    pass: bool,
}

/// Writes the report; CSV has one row per grid point, JSON carries everything.
pub fn write_report(report: &RunReport, format: Format, out: impl Write) -> Result<()> {
    match format {
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, report).map_err(|e| Error::Io(e.to_string()))?;
            writeln!(out)?;
            Ok(())
        }
        Format::Csv => {
            let algorithm = match report.algorithm {
                super::Algorithm::Rand => "rand",
                super::Algorithm::Nonrand => "nonrand",
                super::Algorithm::Baseline => "baseline",
            };
            let mut w = csv::Writer::from_writer(out);
            for pt in &report.points {
                w.serialize(CsvRow {
                    schema_version: report.schema_version,
                    expression: &report.expression,
                    algorithm,
                    p: pt.p,
                    reps: pt.reps,
                    truncated: pt.truncated,
                    mean_y: pt.mean_y.value,
                    mean_y_lo: pt.mean_y.lo,
                    mean_y_hi: pt.mean_y.hi,
                    f: pt.reference_f.map(|e| e.value),
                    f_error: pt.reference_f.map(|e| e.error_bound),
                    mean_n: pt.mean_n.value,
                    mean_n_lo: pt.mean_n.lo,
                    mean_n_hi: pt.mean_n.hi,
                    sd_n: pt.mean_n.sd,
                    expected_n: pt.reference_n.map(|e| e.value),
                    expected_n_error: pt.reference_n.map(|e| e.error_bound),
                    mean_outer: pt.mean_outer,
                    mean_uniforms: pt.mean_uniforms,
                    mean_pairs: pt.mean_pairs,
                    pass: pt.passed(),
                })
                .map_err(|e| Error::Io(e.to_string()))?;
            }
            w.flush()?;
            Ok(())
        }
    }
}
