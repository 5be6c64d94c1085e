//! Stopping probabilities `d_k = c_k / (1 - sum_{j<k} c_j)` and their binary digits.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{Arith, CoefficientSeries, Exactness, Node};
use crate::error::{Error, Result};
use crate::numeric::{
    DyadicConvention, Trail, Value, DEFAULT_DIGIT_CEILING, DEFAULT_PRECISION_BITS,
};

type Rule = Arc<dyn Fn(usize) -> BigRational + Send + Sync>;

enum Source {
    Series { series: CoefficientSeries, closed_forms: bool },
    List(Vec<BigRational>),
    Rule { rule: Rule, name: String },
}

struct Inner {
    source: Source,
    digits: Arc<DigitTable>,
}

/// The sequence `d_1, d_2, ...` driving the per-iteration stop decision.
///
/// `d_k` is the conditional probability that an auxiliary `L ~ (c_k)` equals
/// `k` given `L >= k`. For a finite series with last non-zero coefficient at
/// `K`, `d_K = 1` and `d_k` is undefined for `k > K`.
#[derive(Clone)]
pub struct StoppingSequence {
    inner: Arc<Inner>,
}

pub fn stopping_from_coefficients(c: &CoefficientSeries) -> StoppingSequence {
    StoppingSequence::from_series(c)
}

pub fn coefficients_from_stopping(d: &StoppingSequence) -> CoefficientSeries {
    CoefficientSeries::from_node(Node::FromStopping { stops: d.clone() })
}

impl StoppingSequence {
    fn new(source: Source) -> Self {
        StoppingSequence {
            inner: Arc::new(Inner {
                source,
                digits: Arc::new(DigitTable::new(
                    DyadicConvention::TrailingZeros,
                    DEFAULT_DIGIT_CEILING,
                )),
            }),
        }
    }

    /// Derives `d_k` from `c`, using closed forms for catalog entries that have
    /// one (`d_k = a/k` for `p^a`, `1/k` for the entropy entry, ...).
    pub fn from_series(c: &CoefficientSeries) -> Self {
        Self::new(Source::Series {
            series: c.clone(),
            closed_forms: true,
        })
    }

    /// Like [`from_series`](Self::from_series) but always divides `c_k` by the
    /// remaining mass, ignoring closed forms.
    pub fn from_series_general(c: &CoefficientSeries) -> Self {
        Self::new(Source::Series {
            series: c.clone(),
            closed_forms: false,
        })
    }

    /// Explicit finite list; every entry must lie in `[0, 1]` and the last must be `1`.
    pub fn from_list(d: Vec<BigRational>) -> Result<Self> {
        let Some(last) = d.last() else {
            return Err(Error::InvalidFiniteSeries("empty stopping list".into()));
        };
        if !last.is_one() {
            return Err(Error::InvalidFiniteSeries(format!(
                "last stopping probability is {last}, expected 1"
            )));
        }
        check_unit(&d)?;
        Ok(Self::new(Source::List(d)))
    }

    /// Infinite sequence given by a rule `k -> d_k` (values must lie in `[0, 1]`).
    pub fn from_rule(
        name: impl Into<String>,
        rule: impl Fn(usize) -> BigRational + Send + Sync + 'static,
    ) -> Self {
        Self::new(Source::Rule {
            rule: Arc::new(rule),
            name: name.into(),
        })
    }

    pub fn source(&self) -> Option<&CoefficientSeries> {
        match &self.inner.source {
            Source::Series { series, .. } => Some(series),
            _ => None,
        }
    }

    pub fn terminal_index(&self) -> Option<usize> {
        match &self.inner.source {
            Source::Series { series, .. } => series.terminal_index(),
            Source::List(d) => Some(d.len()),
            Source::Rule { .. } => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        match &self.inner.source {
            Source::Series { series, .. } => series.exactness() == Exactness::ExactRational,
            _ => true,
        }
    }

    /// `d_k` in exact arithmetic (intervals for transcendental sources).
    pub fn d_at(&self, k: usize) -> Result<Value> {
        self.d_in(k, Arith::Exact)
    }

    pub fn d_in(&self, k: usize, arith: Arith) -> Result<Value> {
        if k == 0 {
            return Err(Error::ZeroIndex);
        }
        if let Some(terminal) = self.terminal_index() {
            if k > terminal {
                return Err(Error::BeyondTerminal { index: k, terminal });
            }
        }
        let bits = arith.fixed_bits();
        match &self.inner.source {
            Source::List(d) => Ok(Value::Exact(d[k - 1].clone()).rounded(bits)),
            Source::Rule { rule, name } => {
                let v = rule(k);
                if v.is_negative() || v > BigRational::one() {
                    return Err(Error::ParameterOutOfRange(format!(
                        "rule {name} gave d_{k} = {v} outside [0, 1]"
                    )));
                }
                Ok(Value::Exact(v).rounded(bits))
            }
            Source::Series {
                series,
                closed_forms,
            } => {
                if *closed_forms {
                    if let Some(v) = series.stop_hint(k, arith) {
                        return Ok(v);
                    }
                }
                general_route(series, k, arith)
            }
        }
    }

    /// Head digits of `d_k` under the trailing-zeros convention, memoised.
    pub fn head(&self, k: usize) -> Result<&Head> {
        self.inner.digits.head(self, k)
    }

    /// The shared digit table (trailing-zeros convention, default ceiling).
    pub fn digits(&self) -> &Arc<DigitTable> {
        &self.inner.digits
    }

    pub fn ptr_eq(&self, other: &StoppingSequence) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
    }
}

fn check_unit(d: &[BigRational]) -> Result<()> {
    for (i, v) in d.iter().enumerate() {
        if v.is_negative() || v > &BigRational::one() {
            return Err(Error::ParameterOutOfRange(format!(
                "d_{} = {v} outside [0, 1]",
                i + 1
            )));
        }
    }
    Ok(())
}

fn general_route(series: &CoefficientSeries, k: usize, arith: Arith) -> Result<Value> {
    let c = series.coefficient_in(k, arith)?;
    let remaining = Value::one().sub(&series.partial_sum_in(k - 1, arith)?);
    match &remaining {
        Value::Exact(r) if r.is_zero() => {
            if c.is_exact_zero() {
                Err(Error::BeyondTerminal {
                    index: k,
                    terminal: k - 1,
                })
            } else {
                Err(Error::InconsistentSeries { index: k })
            }
        }
        Value::Exact(r) if r.is_negative() => Err(Error::InconsistentSeries { index: k }),
        _ => {
            if c.is_exact_zero() {
                return Ok(Value::zero().rounded(arith.fixed_bits()));
            }
            let bits = match &remaining {
                Value::Approx(i) => i.bits(),
                Value::Exact(_) => 0,
            };
            let d = c.div(&remaining).map_err(|e| match e {
                Error::InsufficientPrecision { .. } => Error::InsufficientPrecision {
                    what: format!("remaining mass before d_{k} is not separated from zero"),
                    bits,
                },
                other => other,
            })?;
            Ok(clamp_unit(d))
        }
    }
}

fn clamp_unit(v: Value) -> Value {
    match v {
        Value::Approx(i) => Value::Approx(i.clamp_unit()),
        v => v,
    }
}

/// `c_k = d_k * prod_{j<k} (1 - d_j)`, keeping the running product in `products`.
pub(super) fn coefficient_from_stops(
    stops: &StoppingSequence,
    k: usize,
    products: &mut Vec<Value>,
    arith: Arith,
) -> Result<Value> {
    if products.is_empty() {
        products.push(Value::one().rounded(arith.fixed_bits()));
    }
    while products.len() < k {
        let j = products.len();
        let prev = &products[j - 1];
        let next = if prev.is_exact_zero() {
            Value::zero()
        } else {
            prev.mul(&Value::one().sub(&stops.d_in(j, arith)?))
        };
        products.push(next);
    }
    let before = &products[k - 1];
    if before.is_exact_zero() {
        return Ok(Value::zero());
    }
    Ok(stops.d_in(k, arith)?.mul(before))
}

impl fmt::Display for StoppingSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.inner.source {
            Source::Series { series, .. } => write!(f, "{series}"),
            Source::List(d) => {
                let parts: Vec<String> = d.iter().map(ToString::to_string).collect();
                write!(f, "d:[{}]", parts.join(","))
            }
            Source::Rule { name, .. } => write!(f, "d:{name}"),
        }
    }
}

impl fmt::Debug for StoppingSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StoppingSequence({self})")
    }
}

/// First 64 binary digits of `d_k` plus where the expansion becomes constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Head {
    /// Digits 1..=64, digit 1 in the most significant bit.
    pub block: u64,
    /// Set for exact dyadic values (including 0 and 1).
    pub trail: Option<Trail>,
}

impl Head {
    /// Digit `j` for `1 <= j <= 64`.
    pub fn digit(&self, j: u64) -> bool {
        debug_assert!((1..=64).contains(&j));
        (self.block >> (64 - j)) & 1 == 1
    }

    /// When `d_k` is exactly 0 or 1 the decision needs no randomness.
    pub fn certain(&self) -> Option<bool> {
        match self.trail {
            Some(Trail { start: 1, digit }) => Some(digit),
            _ => None,
        }
    }
}

const SEGMENTS: usize = 48;

/// Append-only table with lock-free reads; segment `s` holds `2^s` slots.
struct OnceTable<T> {
    segments: [OnceLock<Box<[OnceLock<T>]>>; SEGMENTS],
}

impl<T> OnceTable<T> {
    fn new() -> Self {
        OnceTable {
            segments: std::array::from_fn(|_| OnceLock::new()),
        }
    }

    fn locate(index: usize) -> (usize, usize) {
        let n = index + 1;
        let seg = (usize::BITS - 1 - n.leading_zeros()) as usize;
        (seg, n - (1usize << seg))
    }

    fn slot(&self, index: usize) -> &OnceLock<T> {
        let (seg, offset) = Self::locate(index);
        let segment = self.segments[seg]
            .get_or_init(|| (0..1usize << seg).map(|_| OnceLock::new()).collect());
        &segment[offset]
    }

    fn get(&self, index: usize) -> Option<&T> {
        let (seg, offset) = Self::locate(index);
        self.segments[seg].get()?[offset].get()
    }
}

/// Memoised binary digits of a stopping sequence under one convention.
///
/// Values known only through intervals are refined by doubling the working
/// precision until the requested digits are certain, up to `ceiling` bits.
pub struct DigitTable {
    convention: DyadicConvention,
    ceiling: u32,
    heads: OnceTable<Head>,
}

impl DigitTable {
    pub fn new(convention: DyadicConvention, ceiling: u32) -> Self {
        DigitTable {
            convention,
            ceiling,
            heads: OnceTable::new(),
        }
    }

    pub fn convention(&self) -> DyadicConvention {
        self.convention
    }

    pub fn ceiling(&self) -> u32 {
        self.ceiling
    }

    pub fn head(&self, d: &StoppingSequence, k: usize) -> Result<&Head> {
        if k == 0 {
            return Err(Error::ZeroIndex);
        }
        if let Some(h) = self.heads.get(k - 1) {
            return Ok(h);
        }
        let (block, value) = self.resolve(d, k, 0)?;
        let head = Head {
            block,
            trail: value.trail(self.convention),
        };
        let slot = self.heads.slot(k - 1);
        let _ = slot.set(head);
        Ok(slot.get().expect("initialised"))
    }

    /// Digits `64*b + 1 ..= 64*b + 64` of `d_k`.
    pub fn block(&self, d: &StoppingSequence, k: usize, b: u32) -> Result<u64> {
        if b == 0 {
            return Ok(self.head(d, k)?.block);
        }
        Ok(self.resolve(d, k, b)?.0)
    }

    /// Digit `j >= 1` of `d_k`.
    pub fn digit(&self, d: &StoppingSequence, k: usize, j: u64) -> Result<bool> {
        if j == 0 {
            return Err(Error::ZeroIndex);
        }
        if j <= 64 {
            return Ok(self.head(d, k)?.digit(j));
        }
        let b = ((j - 1) / 64) as u32;
        let pos = (j - 1) % 64 + 1;
        Ok((self.block(d, k, b)? >> (64 - pos)) & 1 == 1)
    }

    fn resolve(&self, d: &StoppingSequence, k: usize, b: u32) -> Result<(u64, Value)> {
        let v = d.d_at(k)?;
        if let Some(block) = v.digit_block(b, self.convention) {
            return Ok((block, v));
        }
        let needed = 64 * (b + 2);
        let mut bits = match &v {
            Value::Approx(i) => (2 * i.bits()).max(needed),
            Value::Exact(_) => needed.max(DEFAULT_PRECISION_BITS),
        };
        while bits <= self.ceiling {
            let v = d.d_in(k, Arith::Bits(bits))?;
            if let Some(block) = v.digit_block(b, self.convention) {
                return Ok((block, v));
            }
            bits *= 2;
        }
        Err(Error::InsufficientPrecision {
            what: format!("digits {}..{} of d_{k}", 64 * b + 1, 64 * b + 64),
            bits: self.ceiling,
        })
    }
}
