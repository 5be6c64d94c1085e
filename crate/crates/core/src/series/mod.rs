//! Power-series coefficient sequences `c_k` for functions of the form
//! `f(p) = 1 - sum_k c_k (1-p)^k`, with `c_k >= 0` and `sum_k c_k = 1`.
//!
//! A [`CoefficientSeries`] is a cheap, cloneable handle to an immutable node
//! (a catalog entry, a finite list, a combinator or a series rebuilt from
//! stopping probabilities) plus a memo table extended on demand. Coefficients
//! are computed lazily and only up to the highest index requested.

mod catalog;
mod combine;
mod stopping;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::numeric::Value;

pub use catalog::{catalog, CatalogEntry};
pub use combine::{compose, convex_combination, product_complement};
pub use stopping::{
    coefficients_from_stopping, stopping_from_coefficients, DigitTable, Head, StoppingSequence,
};

/// Arithmetic used to evaluate a series.
///
/// `Exact` keeps rational coefficients as rationals; entries involving
/// transcendental constants fall back to intervals at their configured
/// precision. `Bits(b)` evaluates everything as intervals with `b` fractional
/// bits, which keeps numbers small for deep truncations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Arith {
    Exact,
    Bits(u32),
}

impl Arith {
    fn fixed_bits(self) -> Option<u32> {
        match self {
            Arith::Exact => None,
            Arith::Bits(b) => Some(b),
        }
    }

    /// Precision for quantities that cannot be exact.
    fn approx_bits(self, configured: u32) -> u32 {
        match self {
            Arith::Exact => configured,
            Arith::Bits(b) => b,
        }
    }
}

/// How the coefficients are represented.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    ExactRational,
    TrackedPrecision,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesKind {
    Catalog,
    FiniteList,
    Combinator,
    FromStopping,
}

pub(crate) enum Node {
    Power { a: BigRational },
    Sqrt,
    MobiusSqrt,
    Log2Sqrt { bits: u32 },
    ExpSqrt { bits: u32 },
    Entropy,
    Finite { coeffs: Vec<BigRational> },
    Compose(combine::Composition),
    ProductComplement { a: CoefficientSeries, b: CoefficientSeries },
    Convex { a: CoefficientSeries, b: CoefficientSeries, alpha: BigRational },
    FromStopping { stops: StoppingSequence },
}

#[derive(Default)]
struct Memo {
    coeffs: Vec<Value>,
    /// `partial[k] = c_1 + ... + c_k`, with `partial[0] = 0`.
    partial: Vec<Value>,
    /// Node-specific running state (products of `1 - d_j` for `FromStopping`).
    aux: Vec<Value>,
}

struct Inner {
    node: Node,
    memo: Mutex<HashMap<Arith, Memo>>,
}

/// Lazily evaluated coefficient sequence `c_1, c_2, ...`.
///
/// Concurrent readers see identical values; the memo table is guarded by a
/// mutex and only ever grows.
#[derive(Clone)]
pub struct CoefficientSeries {
    inner: Arc<Inner>,
}

impl CoefficientSeries {
    pub(crate) fn from_node(node: Node) -> Self {
        CoefficientSeries {
            inner: Arc::new(Inner {
                node,
                memo: Mutex::new(HashMap::new()),
            }),
        }
    }

    pub(crate) fn node(&self) -> &Node {
        &self.inner.node
    }

    pub fn kind(&self) -> SeriesKind {
        match self.node() {
            Node::Finite { .. } => SeriesKind::FiniteList,
            Node::Compose(_) | Node::ProductComplement { .. } | Node::Convex { .. } => {
                SeriesKind::Combinator
            }
            Node::FromStopping { .. } => SeriesKind::FromStopping,
            _ => SeriesKind::Catalog,
        }
    }

    pub fn exactness(&self) -> Exactness {
        let exact = match self.node() {
            Node::Log2Sqrt { .. } | Node::ExpSqrt { .. } => false,
            Node::Compose(c) => c.exact(),
            Node::ProductComplement { a, b } | Node::Convex { a, b, .. } => {
                a.exactness() == Exactness::ExactRational
                    && b.exactness() == Exactness::ExactRational
            }
            Node::FromStopping { stops } => stops.is_exact(),
            _ => true,
        };
        if exact {
            Exactness::ExactRational
        } else {
            Exactness::TrackedPrecision
        }
    }

    /// Largest index with a non-zero coefficient, when the series is finite.
    pub fn terminal_index(&self) -> Option<usize> {
        match self.node() {
            Node::Finite { coeffs } => Some(coeffs.len()),
            Node::Compose(c) => c.terminal_index(),
            Node::ProductComplement { a, b } => Some(a.terminal_index()? + b.terminal_index()?),
            Node::Convex { a, b, .. } => Some(a.terminal_index()?.max(b.terminal_index()?)),
            Node::FromStopping { stops } => stops.terminal_index(),
            _ => None,
        }
    }

    /// `c_k` in exact arithmetic (intervals for transcendental entries).
    pub fn coefficient_at(&self, k: usize) -> Result<Value> {
        self.coefficient_in(k, Arith::Exact)
    }

    /// `c_1 + ... + c_k`; `partial_sum_at(0)` is zero.
    pub fn partial_sum_at(&self, k: usize) -> Result<Value> {
        self.partial_sum_in(k, Arith::Exact)
    }

    pub fn coefficient_in(&self, k: usize, arith: Arith) -> Result<Value> {
        if k == 0 {
            return Err(Error::ZeroIndex);
        }
        self.with_memo(k, arith, |m| m.coeffs[k - 1].clone())
    }

    pub fn partial_sum_in(&self, k: usize, arith: Arith) -> Result<Value> {
        if k == 0 {
            return Ok(Value::zero().rounded(arith.fixed_bits()));
        }
        self.with_memo(k, arith, |m| m.partial[k].clone())
    }

    /// `c_1..=c_k` in one lock acquisition.
    pub fn coefficients_in(&self, k: usize, arith: Arith) -> Result<Vec<Value>> {
        if k == 0 {
            return Ok(Vec::new());
        }
        self.with_memo(k, arith, |m| m.coeffs[..k].to_vec())
    }

    fn with_memo<T>(&self, k: usize, arith: Arith, read: impl FnOnce(&Memo) -> T) -> Result<T> {
        let mut guard = self.inner.memo.lock().unwrap_or_else(|e| e.into_inner());
        let memo = guard.entry(arith).or_default();
        if memo.partial.is_empty() {
            memo.partial.push(Value::zero().rounded(arith.fixed_bits()));
        }
        while memo.coeffs.len() < k {
            let index = memo.coeffs.len() + 1;
            let c = self.next_coefficient(index, memo, arith)?.rounded(arith.fixed_bits());
            let s = memo.partial[index - 1].add(&c);
            memo.coeffs.push(c);
            memo.partial.push(s);
        }
        Ok(read(memo))
    }

    fn next_coefficient(&self, k: usize, memo: &mut Memo, arith: Arith) -> Result<Value> {
        match self.node() {
            Node::Compose(c) => c.coefficient(k, arith),
            Node::ProductComplement { a, b } => combine::cauchy_term(a, b, k, arith),
            Node::Convex { a, b, alpha } => combine::convex_term(a, b, alpha, k, arith),
            Node::FromStopping { stops } => stopping::coefficient_from_stops(stops, k, &mut memo.aux, arith),
            node => catalog::next_catalog_coefficient(node, k, &memo.coeffs, arith),
        }
    }

    /// Closed-form `d_k` when the node has one.
    pub(crate) fn stop_hint(&self, k: usize, arith: Arith) -> Option<Value> {
        let v = match self.node() {
            Node::Power { a } => Value::Exact(a / BigRational::from_integer(k.into())),
            Node::Sqrt => Value::ratio(1, 2 * k as i64),
            Node::MobiusSqrt => Value::ratio(1, 2 * k as i64 + 2),
            Node::Entropy if k == 1 => Value::zero(),
            Node::Entropy => Value::ratio(1, k as i64),
            _ => return None,
        };
        Some(v.rounded(arith.fixed_bits()))
    }

    /// True when two handles share the same underlying node.
    pub fn ptr_eq(&self, other: &CoefficientSeries) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
    }
}

impl fmt::Display for CoefficientSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Power { a } => write!(f, "power:a={a}"),
            Node::Sqrt => f.write_str("sqrt"),
            Node::MobiusSqrt => f.write_str("mobius_sqrt"),
            Node::Log2Sqrt { .. } => f.write_str("log2_sqrt"),
            Node::ExpSqrt { .. } => f.write_str("exp_sqrt"),
            Node::Entropy => f.write_str("entropy"),
            Node::Finite { coeffs } => {
                f.write_str("finite:[")?;
                for (i, c) in coeffs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str("]")
            }
            Node::Compose(c) => write!(f, "compose({},{},order={})", c.inner, c.outer, c.order),
            Node::ProductComplement { a, b } => write!(f, "pc({a},{b})"),
            Node::Convex { a, b, alpha } => write!(f, "convex({a},{b},alpha={alpha})"),
            Node::FromStopping { stops } => write!(f, "from_stopping({stops})"),
        }
    }
}

impl fmt::Debug for CoefficientSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CoefficientSeries({self})")
    }
}
