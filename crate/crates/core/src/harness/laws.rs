//! Exact laws the Monte Carlo output is checked against.

use num_traits::{One, ToPrimitive};
use serde::Serialize;

use super::stats::{chi_square, ChiSquare};
use super::PointRecord;
use crate::analysis::{eval_f, nonrandomized_cost_factor, EvalResult, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::factory::{Factory, Mode};
use crate::nonrand::DigitOracle;
use crate::series::{coefficients_from_stopping, Arith, CoefficientSeries};

/// Reference output probability and expected input count of a factory tree.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Law {
    pub f: EvalResult,
    /// `None` when no closed form is available (baseline, dyadic shortcut).
    pub expected_n: Option<EvalResult>,
}

fn exact(value: f64) -> EvalResult {
    EvalResult {
        value,
        error_bound: 0.0,
        terms_used: 0,
    }
}

fn slack(v: f64) -> f64 {
    4.0 * f64::EPSILON * v.abs()
}

fn add(a: EvalResult, b: EvalResult) -> EvalResult {
    let value = a.value + b.value;
    EvalResult {
        value,
        error_bound: a.error_bound + b.error_bound + slack(value),
        terms_used: a.terms_used.max(b.terms_used),
    }
}

fn mul(a: EvalResult, b: EvalResult) -> EvalResult {
    let value = a.value * b.value;
    EvalResult {
        value,
        error_bound: a.value.abs() * b.error_bound
            + b.value.abs() * a.error_bound
            + a.error_bound * b.error_bound
            + slack(value),
        terms_used: a.terms_used.max(b.terms_used),
    }
}

/// The coefficient series behind an early-stopping node.
pub fn series_of(oracle: &DigitOracle) -> CoefficientSeries {
    match oracle.stops().source() {
        Some(c) => c.clone(),
        None => coefficients_from_stopping(oracle.stops()),
    }
}

/// `Pr[Y = 1]` and `E[inputs]` for `factory` at coin probability `p`.
pub fn reference_law(factory: &Factory, p: f64, mode: Mode) -> Result<Law> {
    Ok(match factory {
        Factory::Series(o) => {
            let f = eval_f(&series_of(o), p, DEFAULT_TOL)?;
            let per_outer = match mode {
                Mode::Randomized => Some(1.0),
                Mode::NonRandomized { dyadic_shortcut: false } => Some(nonrandomized_cost_factor(p)),
                Mode::NonRandomized { dyadic_shortcut: true } => None,
            };
            Law {
                f,
                expected_n: per_outer.map(|m| mul(f, exact(m / p))),
            }
        }
        Factory::Baseline { oracle, .. } => Law {
            f: eval_f(&series_of(oracle), p, DEFAULT_TOL)?,
            expected_n: None,
        },
        Factory::Complement(inner) => {
            let law = reference_law(inner, p, mode)?;
            Law {
                f: EvalResult {
                    value: 1.0 - law.f.value,
                    error_bound: law.f.error_bound + f64::EPSILON,
                    ..law.f
                },
                expected_n: law.expected_n,
            }
        }
        Factory::FlipInput(inner) => reference_law(inner, 1.0 - p, mode)?,
        Factory::Scale { inner, alpha } => {
            let law = reference_law(inner, p, mode)?;
            let a = alpha.value();
            if a.is_one() {
                return Ok(law);
            }
            let af = exact(a.to_f64().unwrap_or(f64::NAN));
            // The weight coin is exact; only f64 rounding of alpha enters.
            let af = EvalResult {
                error_bound: slack(af.value),
                ..af
            };
            let coin_cost = match mode {
                Mode::Randomized => Some(exact(0.0)),
                // A fair-bit walk needs two fair bits on average, each 1/(pq) coins.
                Mode::NonRandomized { dyadic_shortcut: false } => {
                    Some(exact(2.0 / (p * (1.0 - p))))
                }
                Mode::NonRandomized { dyadic_shortcut: true } => None,
            };
            Law {
                f: mul(af, law.f),
                expected_n: match (coin_cost, law.expected_n) {
                    (Some(c), Some(e)) => Some(add(c, mul(af, e))),
                    _ => None,
                },
            }
        }
        Factory::Product(a, b) => {
            let la = reference_law(a, p, mode)?;
            let lb = reference_law(b, p, mode)?;
            Law {
                f: mul(la.f, lb.f),
                expected_n: match (la.expected_n, lb.expected_n) {
                    (Some(ea), Some(eb)) => Some(add(ea, mul(la.f, eb))),
                    _ => None,
                },
            }
        }
    })
}

/// One cell `(N = n, Y = 0)` of the joint law.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointCell {
    pub n: u64,
    pub observed: u64,
    /// `c_n (1-p)^n`.
    pub expected_prob: f64,
    pub z: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointLawCheck {
    pub cells: Vec<JointCell>,
    pub chi_square: ChiSquare,
    pub pass: bool,
}

/// Minimum expected count for a cell to be tested.
pub const MIN_EXPECTED_COUNT: f64 = 25.0;

/// Compares the observed `(N = n, Y = 0)` frequencies of an early-stopping
/// run with `c_n (1-p)^n`. Cells whose coefficient is exactly zero must be
/// empty; other cells are tested when their expected count is at least 25.
/// The chi-square statistic pools the tested cells with one remainder cell.
pub fn test_joint_law(
    record: &PointRecord,
    c: &CoefficientSeries,
    p: f64,
    sigma: f64,
) -> Result<JointLawCheck> {
    let hist = record.outer_histogram.as_ref().ok_or_else(|| {
        Error::InsufficientReplications("the record carries no histogram".into())
    })?;
    let m = record.reps;
    let max_n = hist.last().map_or(0, |r| r.n);
    let observed_at = |n: u64| hist.iter().find(|r| r.n == n).map_or(0, |r| r.y0);
    let q = 1.0 - p;
    let mut cells = Vec::new();
    for n in 1..=max_n {
        let c_n = c.coefficient_in(n as usize, Arith::Bits(128))?;
        let obs = observed_at(n);
        if c_n.is_exact_zero() {
            cells.push(JointCell {
                n,
                observed: obs,
                expected_prob: 0.0,
                z: if obs == 0 { 0.0 } else { f64::INFINITY },
                pass: obs == 0,
            });
            continue;
        }
        let prob = c_n.to_f64() * q.powi(n as i32);
        if prob * (m as f64) < MIN_EXPECTED_COUNT {
            continue;
        }
        let se = (prob * (1.0 - prob) / m as f64).sqrt();
        let z = (obs as f64 / m as f64 - prob) / se;
        cells.push(JointCell {
            n,
            observed: obs,
            expected_prob: prob,
            z,
            pass: z.abs() < sigma,
        });
    }
    if !cells.iter().any(|c| c.expected_prob > 0.0) {
        return Err(Error::InsufficientReplications(format!(
            "no joint-law cell reaches an expected count of {MIN_EXPECTED_COUNT} with {m} replications"
        )));
    }
    let mut observed: Vec<u64> = cells.iter().map(|c| c.observed).collect();
    let mut expected: Vec<f64> = cells.iter().map(|c| c.expected_prob).collect();
    observed.push(m - observed.iter().sum::<u64>());
    expected.push((1.0 - expected.iter().sum::<f64>()).max(0.0));
    let chi = chi_square(&observed, &expected);
    Ok(JointLawCheck {
        pass: cells.iter().all(|c| c.pass),
        cells,
        chi_square: chi,
    })
}
