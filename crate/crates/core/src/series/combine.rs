//! Coefficient-level combinators: composition, product with complement and
//! convex combination. Each preserves `c_k >= 0` and `sum c_k = 1`.

use std::collections::HashMap;
use std::sync::Mutex;

use num_rational::BigRational;
use num_traits::{One, Signed};

use super::{Arith, CoefficientSeries, Exactness, Node};
use crate::error::{Error, Result};
use crate::numeric::Value;

/// `f(p) = outer(inner(p))`.
///
/// With `q = 1 - p`, `1 - inner(p) = I(q) = sum_i c1_i q^i`, hence
/// `c_k = sum_j c2_j [q^k] I(q)^j`. Every factor of `I` has degree at least
/// one, so `[q^k] I^j` only involves `c1_1..=c1_k` and vanishes for `j > k`.
pub(crate) struct Composition {
    pub(crate) inner: CoefficientSeries,
    pub(crate) outer: CoefficientSeries,
    pub(crate) order: usize,
    /// `powers[j-1][m-1] = [q^m] I(q)^j`, per arithmetic.
    powers: Mutex<HashMap<Arith, Vec<Vec<Value>>>>,
}

impl Composition {
    pub(crate) fn exact(&self) -> bool {
        self.inner.exactness() == Exactness::ExactRational
            && self.outer.exactness() == Exactness::ExactRational
    }

    pub(crate) fn terminal_index(&self) -> Option<usize> {
        Some(self.inner.terminal_index()? * self.outer.terminal_index()?)
    }

    pub(crate) fn coefficient(&self, k: usize, arith: Arith) -> Result<Value> {
        let c1 = self.inner.coefficients_in(k, arith)?;
        let c2 = self.outer.coefficients_in(k, arith)?;
        let mut guard = self.powers.lock().unwrap_or_else(|e| e.into_inner());
        let powers = guard.entry(arith).or_default();
        let zero = Value::zero();
        // Extend every power table to degree m, one degree at a time.
        let have = powers.first().map_or(0, Vec::len);
        for m in have + 1..=k {
            if powers.len() < m {
                powers.push(vec![zero.clone(); m - 1]);
            }
            for j in 1..=m {
                let term = if j == 1 {
                    c1[m - 1].clone()
                } else {
                    // [q^m] I^j = sum_i c1_i [q^(m-i)] I^(j-1), with m - i >= j - 1.
                    let prev = &powers[j - 2];
                    let mut acc = Value::zero();
                    for i in 1..=m + 1 - j {
                        let a = &c1[i - 1];
                        let b = &prev[m - i - 1];
                        if a.is_exact_zero() || b.is_exact_zero() {
                            continue;
                        }
                        acc = acc.add(&a.mul(b));
                    }
                    acc
                };
                powers[j - 1].push(term);
            }
        }
        let mut acc = Value::zero();
        for j in 1..=k {
            let w = &c2[j - 1];
            let t = &powers[j - 1][k - 1];
            if w.is_exact_zero() || t.is_exact_zero() {
                continue;
            }
            acc = acc.add(&w.mul(t));
        }
        Ok(acc)
    }
}

/// Composition `outer(inner(p))`. Coefficients `c_1..=c_order` are
/// materialised immediately; later indices are extended lazily with the same
/// exact convolution.
pub fn compose(
    inner: &CoefficientSeries,
    outer: &CoefficientSeries,
    order: usize,
) -> Result<CoefficientSeries> {
    if order == 0 {
        return Err(Error::ParameterOutOfRange("composition order must be >= 1".into()));
    }
    let series = CoefficientSeries::from_node(Node::Compose(Composition {
        inner: inner.clone(),
        outer: outer.clone(),
        order,
        powers: Mutex::new(HashMap::new()),
    }));
    series.coefficient_at(order)?;
    Ok(series)
}

/// `g(p) = 1 - (1 - f1(p)) (1 - f2(p))`: Cauchy product of the coefficients.
pub fn product_complement(a: &CoefficientSeries, b: &CoefficientSeries) -> CoefficientSeries {
    CoefficientSeries::from_node(Node::ProductComplement {
        a: a.clone(),
        b: b.clone(),
    })
}

/// `h(p) = alpha f1(p) + (1 - alpha) f2(p)` for `alpha` in `(0, 1)`.
pub fn convex_combination(
    a: &CoefficientSeries,
    b: &CoefficientSeries,
    alpha: BigRational,
) -> Result<CoefficientSeries> {
    if !alpha.is_positive() || alpha >= BigRational::one() {
        return Err(Error::ParameterOutOfRange(format!(
            "convex weight alpha = {alpha} must lie in (0, 1)"
        )));
    }
    Ok(CoefficientSeries::from_node(Node::Convex {
        a: a.clone(),
        b: b.clone(),
        alpha,
    }))
}

pub(super) fn cauchy_term(
    a: &CoefficientSeries,
    b: &CoefficientSeries,
    k: usize,
    arith: Arith,
) -> Result<Value> {
    if k < 2 {
        return Ok(Value::zero());
    }
    let ca = a.coefficients_in(k - 1, arith)?;
    let cb = b.coefficients_in(k - 1, arith)?;
    let mut acc = Value::zero();
    for i in 1..k {
        let (x, y) = (&ca[i - 1], &cb[k - i - 1]);
        if x.is_exact_zero() || y.is_exact_zero() {
            continue;
        }
        acc = acc.add(&x.mul(y));
    }
    Ok(acc)
}

pub(super) fn convex_term(
    a: &CoefficientSeries,
    b: &CoefficientSeries,
    alpha: &BigRational,
    k: usize,
    arith: Arith,
) -> Result<Value> {
    let w = Value::Exact(alpha.clone());
    let w_rest = Value::Exact(BigRational::one() - alpha);
    Ok(w.mul(&a.coefficient_in(k, arith)?)
        .add(&w_rest.mul(&b.coefficient_in(k, arith)?)))
}
