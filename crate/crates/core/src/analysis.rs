//! Reference values: `f(p)`, `f'(p)`, expected input counts and the
//! information lower bound, each with a guaranteed error bound.
//!
//! Sums are accumulated in outward-rounded interval arithmetic, so the only
//! approximation besides the truncated tail is the final conversion to `f64`.

use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{rational_from_f64, Interval};
use crate::series::{Arith, CoefficientSeries};

/// Default absolute tolerance for truncated evaluations.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Evaluations give up after this many terms.
pub const MAX_TERMS: usize = 4_000_000;

const BITS: u32 = 128;

/// A value with `|true - value| <= error_bound`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EvalResult {
    pub value: f64,
    pub error_bound: f64,
    pub terms_used: usize,
}

impl EvalResult {
    pub fn lower(&self) -> f64 {
        self.value - self.error_bound
    }

    pub fn upper(&self) -> f64 {
        self.value + self.error_bound
    }

    fn from_interval(i: &Interval, extra: f64, terms_used: usize) -> Self {
        let lo = to_f64(&i.lo());
        let hi = to_f64(&i.hi());
        let value = 0.5 * (lo + hi);
        // One ulp of slack for each rounding into f64.
        let slack = 4.0 * f64::EPSILON * value.abs().max(f64::MIN_POSITIVE);
        EvalResult {
            value,
            error_bound: 0.5 * (hi - lo) + extra + slack,
            terms_used,
        }
    }

    fn scaled(self, factor: f64) -> Self {
        EvalResult {
            value: self.value * factor,
            error_bound: self.error_bound * factor.abs() * (1.0 + 4.0 * f64::EPSILON)
                + 4.0 * f64::EPSILON * (self.value * factor).abs(),
            terms_used: self.terms_used,
        }
    }
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange(format!("p = {p} must lie in (0, 1)")))
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange(format!("tolerance {tol} must be positive")))
    }
}

/// Walks `c_1, c_2, ...` in growing chunks, calling `step(k, c_k)` until it
/// returns `true` or the term cap is hit.
fn walk(
    c: &CoefficientSeries,
    tol: f64,
    mut step: impl FnMut(usize, &Interval) -> Result<bool>,
) -> Result<usize> {
    let terminal = c.terminal_index();
    let mut done = 0usize;
    let mut chunk = 64usize;
    while done < MAX_TERMS {
        let upto = match terminal {
            Some(t) => (done + chunk).min(t),
            None => done + chunk,
        };
        if upto == done {
            return Ok(done);
        }
        let coeffs = c.coefficients_in(upto, Arith::Bits(BITS))?;
        for (i, v) in coeffs[done..].iter().enumerate() {
            let k = done + i + 1;
            if step(k, &v.to_interval(BITS))? {
                return Ok(k);
            }
        }
        done = upto;
        chunk = (chunk * 2).min(1 << 16);
    }
    Err(Error::ToleranceUnachievable { tol, cap: MAX_TERMS })
}

/// The tail bound costs a big-rational conversion, so past the first terms it
/// is only evaluated every 64 terms.
fn check_due(k: usize) -> bool {
    k < 256 || k.is_multiple_of(64)
}

/// `f(p) = 1 - sum_k c_k (1-p)^k`, truncated once the remaining mass
/// `(1 - S_K) (1-p)^(K+1)` is below `tol / 2`; the rest of `tol` absorbs rounding.
pub fn eval_f(c: &CoefficientSeries, p: f64, tol: f64) -> Result<EvalResult> {
    check_p(p)?;
    check_tol(tol)?;
    let q = Interval::from_rational(&(BigRational::one() - rational_from_f64(p)), BITS);
    let one = Interval::from_rational(&BigRational::one(), BITS);
    let mut qk = one.clone();
    let mut sum = Interval::from_rational(&BigRational::from_integer(0.into()), BITS);
    let mut mass = sum.clone();
    let mut tail = 0.0;
    let terms = walk(c, tol, |k, ck| {
        qk = qk.mul(&q);
        sum = sum.add(&ck.mul(&qk));
        mass = mass.add(ck);
        if !check_due(k) {
            return Ok(false);
        }
        // Remaining terms weigh at most (1 - S_K) q^(K+1).
        let bound = one.sub(&mass).mul(&qk.mul(&q));
        tail = to_f64(&bound.hi()).max(0.0) * (1.0 + 4.0 * f64::EPSILON);
        Ok(tail <= 0.5 * tol)
    })?;
    if c.terminal_index() == Some(terms) {
        tail = 0.0;
    }
    Ok(EvalResult::from_interval(&one.sub(&sum), tail, terms))
}

/// `f'(p) = sum_k k c_k (1-p)^(k-1)`.
///
/// `k q^(k-1)` is non-increasing in `k` once `k >= q / p`, so for
/// `K + 1 >= q / p` the tail is at most `(1 - S_K) (K+1) q^K`.
pub fn eval_f_prime(c: &CoefficientSeries, p: f64, tol: f64) -> Result<EvalResult> {
    check_p(p)?;
    check_tol(tol)?;
    let q_f64 = 1.0 - p;
    let q = Interval::from_rational(&(BigRational::one() - rational_from_f64(p)), BITS);
    let one = Interval::from_rational(&BigRational::one(), BITS);
    let mut qk_minus_1 = one.clone();
    let mut sum = Interval::from_rational(&BigRational::from_integer(0.into()), BITS);
    let mut mass = sum.clone();
    let mut tail = 0.0;
    let terms = walk(c, tol, |k, ck| {
        let weight = Interval::from_rational(&BigRational::from_integer(k.into()), BITS);
        sum = sum.add(&weight.mul(ck).mul(&qk_minus_1));
        mass = mass.add(ck);
        qk_minus_1 = qk_minus_1.mul(&q);
        if !check_due(k) || ((k + 1) as f64) < q_f64 / p * (1.0 + 1e-12) + 1e-9 {
            return Ok(false);
        }
        let next = Interval::from_rational(&BigRational::from_integer((k + 1).into()), BITS);
        let bound = one.sub(&mass).mul(&next).mul(&qk_minus_1);
        tail = to_f64(&bound.hi()).max(0.0) * (1.0 + 4.0 * f64::EPSILON);
        Ok(tail <= 0.5 * tol)
    })?;
    if c.terminal_index() == Some(terms) {
        tail = 0.0;
    }
    Ok(EvalResult::from_interval(&sum, tail, terms))
}

/// Expected inputs of the early-stopping sampler, `f(p) / p`.
pub fn expected_inputs_alg1(c: &CoefficientSeries, p: f64) -> Result<EvalResult> {
    Ok(eval_f(c, p, DEFAULT_TOL)?.scaled(1.0 / p))
}

/// Expected inputs of the non-randomized sampler, `f(p)/p * (1 + 2/(p(1-p)))`.
pub fn expected_inputs_alg2(c: &CoefficientSeries, p: f64) -> Result<EvalResult> {
    Ok(eval_f(c, p, DEFAULT_TOL)?.scaled(nonrandomized_cost_factor(p) / p))
}

/// Expected inputs per outer iteration of the non-randomized sampler.
pub fn nonrandomized_cost_factor(p: f64) -> f64 {
    1.0 + 2.0 / (p * (1.0 - p))
}

/// `f'(p)^2 p (1-p) / (f(p) (1 - f(p)))`, a lower bound on the expected
/// inputs of any sampler for `f`.
pub fn cramer_rao_bound(c: &CoefficientSeries, p: f64) -> Result<EvalResult> {
    let f = eval_f(c, p, DEFAULT_TOL)?;
    let fp = eval_f_prime(c, p, DEFAULT_TOL)?;
    cramer_rao_from_values(f, fp, p)
}

/// The same bound from enclosures of `f(p)` and `f'(p)`.
pub fn cramer_rao_from_values(f: EvalResult, fp: EvalResult, p: f64) -> Result<EvalResult> {
    check_p(p)?;
    let (f_lo, f_hi) = (f.lower(), f.upper());
    if f_lo <= 0.0 || f_hi >= 1.0 {
        return Err(Error::InsufficientPrecision {
            what: format!("f(p) = {} ± {} is not separated from 0 and 1", f.value, f.error_bound),
            bits: BITS,
        });
    }
    let var = |x: f64| x * (1.0 - x);
    let v_min = var(f_lo).min(var(f_hi));
    let v_max = var(f_lo.max(0.5_f64.min(f_hi)));
    let d_lo = fp.lower().max(0.0);
    let d_hi = fp.upper();
    let pq = p * (1.0 - p);
    let lo = d_lo * d_lo * pq / v_max;
    let hi = d_hi * d_hi * pq / v_min;
    let value = 0.5 * (lo + hi);
    Ok(EvalResult {
        value,
        error_bound: 0.5 * (hi - lo) + 8.0 * f64::EPSILON * value,
        terms_used: f.terms_used.max(fp.terms_used),
    })
}

/// Bound for `f(p) = c p`: `c (1 - p) / (1 - c p)`.
pub fn linear_bound(c: f64, p: f64) -> f64 {
    c * (1.0 - p) / (1.0 - c * p)
}
