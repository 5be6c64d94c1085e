//! Cost against the optimal rate over a grid of small `p`.

use num_traits::ToPrimitive;
use serde::Serialize;

use super::stats::{linear_fit, mean_sd, LineFit};
use super::{point_seed, replicate};
use crate::analysis::{expected_inputs_alg1, EvalResult};
use crate::error::Result;
use crate::expr::SeriesExpr;
use crate::factory::{Factory, Mode};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub series: String,
    pub p: f64,
    pub reps: u64,
    pub mean_n: f64,
    pub se_n: f64,
    /// `f(p) / p`.
    pub expected_n: EvalResult,
    /// `mean_n * p / f(p)`; one for a sampler meeting the rate with constant one.
    pub ratio: f64,
    pub ratio_se: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub series: String,
    /// Fit of `ln mean_n` against `ln p`.
    pub empirical: LineFit,
    /// Same fit through the exact `f(p)/p`.
    pub exact: LineFit,
    /// `a - 1` for `power:a`, `-1/2` for `sqrt`.
    pub predicted: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub fits: Vec<SlopeFit>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

fn predicted_slope(e: &SeriesExpr) -> Option<f64> {
    match e {
        SeriesExpr::Power(a) => Some(a.to_f64()? - 1.0),
        SeriesExpr::Sqrt => Some(-0.5),
        _ => None,
    }
}

/// Runs the randomized sampler for every entry at every grid point, checks
/// `E[N] p / f(p) = 1` within `sigma` standard errors, and fits log-log slopes.
pub fn sweep_optimality(
    entries: &[SeriesExpr],
    grid: &[f64],
    reps: u64,
    seed: u64,
    sigma: f64,
) -> Result<SweepReport> {
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for (i, entry) in entries.iter().enumerate() {
        let series = entry.build()?;
        let factory = Factory::series(&series);
        let entry_seed = point_seed(seed, i);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut exact_ys = Vec::new();
        for (j, &p) in grid.iter().enumerate() {
            let t = replicate(&factory, Mode::Randomized, p, reps, point_seed(entry_seed, j))?;
            let (mean, sd) = mean_sd(t.inputs, t.inputs_sq, t.reps);
            let se = sd / (t.reps as f64).sqrt();
            let expected = expected_inputs_alg1(&series, p)?;
            let ratio = mean / expected.value;
            let ratio_se = se / expected.value;
            let slack = expected.error_bound / expected.value;
            rows.push(SweepRow {
                series: entry.to_string(),
                p,
                reps: t.reps,
                mean_n: mean,
                se_n: se,
                expected_n: expected,
                ratio,
                ratio_se,
                pass: (ratio - 1.0).abs() <= sigma * ratio_se + slack,
            });
            xs.push(p.ln());
            ys.push(mean.ln());
            exact_ys.push(expected.value.ln());
        }
        if grid.len() >= 2 {
            fits.push(SlopeFit {
                series: entry.to_string(),
                empirical: linear_fit(&xs, &ys),
                exact: linear_fit(&xs, &exact_ys),
                predicted: predicted_slope(entry),
            });
        }
    }
    Ok(SweepReport { rows, fits })
}
