//! Experiment files and probability grids.
//!
//! An experiment file is TOML with one key per [`ExperimentSpec`] field:
//!
//! ```toml
//! expression = "compose(sqrt,sqrt,order=32)"
//! p = "geom:0.25,0.001,9"      # or a list: p = [0.1, 0.5, 0.9]
//! reps = 100000
//! seed = 42
//! algorithm = "rand"           # rand | nonrand | baseline
//! ```
//!
//! Unknown keys are rejected; omitted keys take their defaults.

use std::path::Path;

use super::ExperimentSpec;
use crate::error::{Error, Result};

/// Parses `"0.1,0.5,0.9"` or `"geom:start,stop,points"` (geometric, both ends included).
pub fn parse_p_grid(text: &str) -> Result<Vec<f64>> {
    let bad = |what: &str| Error::InvalidExperiment(format!("p grid '{text}': {what}"));
    let text = text.trim();
    if let Some(rest) = text.strip_prefix("geom:") {
        let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
        let [start, stop, points] = parts[..] else {
            return Err(bad("expected geom:start,stop,points"));
        };
        let start: f64 = start.parse().map_err(|_| bad("bad start"))?;
        let stop: f64 = stop.parse().map_err(|_| bad("bad stop"))?;
        let points: usize = points.parse().map_err(|_| bad("bad point count"))?;
        if points == 0 || start <= 0.0 || stop <= 0.0 {
            return Err(bad("start and stop must be positive and points at least 1"));
        }
        if points == 1 {
            return Ok(vec![start]);
        }
        let ratio = (stop / start).powf(1.0 / (points - 1) as f64);
        let mut grid: Vec<f64> = (0..points).map(|i| start * ratio.powi(i as i32)).collect();
        grid[points - 1] = stop;
        return Ok(grid);
    }
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad(&format!("'{s}' is not a number"))))
        .collect()
}

/// Reads an experiment from TOML text.
pub fn spec_from_toml(text: &str) -> Result<ExperimentSpec> {
    let mut table: toml::Table =
        toml::from_str(text).map_err(|e| Error::InvalidExperiment(e.to_string()))?;
    if let Some(toml::Value::String(grid)) = table.get("p") {
        let values = parse_p_grid(grid)?.into_iter().map(toml::Value::Float).collect();
        table.insert("p".into(), toml::Value::Array(values));
    }
    if let Some(toml::Value::Array(items)) = table.get_mut("p") {
        for v in items.iter_mut() {
            if let toml::Value::Integer(i) = v {
                *v = toml::Value::Float(*i as f64);
            }
        }
    }
    let spec: ExperimentSpec = table
        .try_into()
        .map_err(|e: toml::de::Error| Error::InvalidExperiment(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

pub fn load_spec(path: impl AsRef<Path>) -> Result<ExperimentSpec> {
    spec_from_toml(&std::fs::read_to_string(path)?)
}
