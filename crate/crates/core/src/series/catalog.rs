//! Built-in coefficient generators.

use num_bigint::BigInt;
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{Arith, CoefficientSeries, Node};
use crate::error::{Error, Result};
use crate::numeric::{e_minus_one_interval, ln2_interval, Value, DEFAULT_PRECISION_BITS};

/// Named entries of the built-in catalog.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CatalogEntry {
    /// `p^a`, `a` rational in `(0, 1)`.
    Power(BigRational),
    /// `sqrt(p)`, from the central-binomial formula.
    Sqrt,
    /// `2 sqrt(p) / (1 + sqrt(p))`.
    MobiusSqrt,
    /// `log2(1 + sqrt(p))`.
    Log2Sqrt,
    /// `(1 - exp(-sqrt(p))) / (1 - exp(-1))`.
    ExpSqrt,
    /// `p (1 - ln p)`.
    Entropy,
    /// Explicit coefficients `c_1, ..., c_K` summing to exactly one.
    Finite(Vec<BigRational>),
}

pub fn catalog(entry: &CatalogEntry) -> Result<CoefficientSeries> {
    match entry {
        CatalogEntry::Power(a) => CoefficientSeries::power(a.clone()),
        CatalogEntry::Sqrt => Ok(CoefficientSeries::sqrt()),
        CatalogEntry::MobiusSqrt => Ok(CoefficientSeries::mobius_sqrt()),
        CatalogEntry::Log2Sqrt => Ok(CoefficientSeries::log2_sqrt()),
        CatalogEntry::ExpSqrt => Ok(CoefficientSeries::exp_sqrt()),
        CatalogEntry::Entropy => Ok(CoefficientSeries::entropy()),
        CatalogEntry::Finite(c) => CoefficientSeries::finite(c.clone()),
    }
}

impl CoefficientSeries {
    pub fn power(a: BigRational) -> Result<Self> {
        if !a.is_positive() || a >= BigRational::one() {
            return Err(Error::ParameterOutOfRange(format!(
                "power exponent a = {a} must lie in (0, 1)"
            )));
        }
        Ok(Self::from_node(Node::Power { a }))
    }

    pub fn sqrt() -> Self {
        Self::from_node(Node::Sqrt)
    }

    pub fn mobius_sqrt() -> Self {
        Self::from_node(Node::MobiusSqrt)
    }

    pub fn log2_sqrt() -> Self {
        Self::log2_sqrt_with_bits(DEFAULT_PRECISION_BITS)
    }

    pub fn log2_sqrt_with_bits(bits: u32) -> Self {
        Self::from_node(Node::Log2Sqrt { bits })
    }

    pub fn exp_sqrt() -> Self {
        Self::exp_sqrt_with_bits(DEFAULT_PRECISION_BITS)
    }

    pub fn exp_sqrt_with_bits(bits: u32) -> Self {
        Self::from_node(Node::ExpSqrt { bits })
    }

    pub fn entropy() -> Self {
        Self::from_node(Node::Entropy)
    }

    /// Finite coefficient list. Trailing zeros are dropped; the list must be
    /// non-negative and sum to exactly one. Lists summing to less than one
    /// belong behind the `scale` factory transform instead.
    pub fn finite(coeffs: Vec<BigRational>) -> Result<Self> {
        let mut coeffs = coeffs;
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            return Err(Error::InvalidFiniteSeries("no non-zero coefficient".into()));
        }
        if let Some((i, c)) = coeffs.iter().enumerate().find(|(_, c)| c.is_negative()) {
            return Err(Error::InvalidFiniteSeries(format!("c_{} = {c} is negative", i + 1)));
        }
        let total: BigRational = coeffs.iter().sum();
        if total != BigRational::one() {
            return Err(Error::InvalidFiniteSeries(format!(
                "coefficients sum to {total}, expected exactly 1 (use scale(...) for sums below 1)"
            )));
        }
        Ok(Self::from_node(Node::Finite { coeffs }))
    }

    /// `f(p) = p`.
    pub fn identity() -> Self {
        Self::finite(vec![BigRational::one()]).expect("valid")
    }
}

fn pow2(e: usize) -> BigInt {
    BigInt::one() << e
}

/// `binom(2n, n)`.
fn central_binomial(n: usize) -> BigInt {
    binomial(BigInt::from(2 * n), BigInt::from(n))
}

/// Next coefficient `c_k` of a catalog node given `prev = [c_1, ..., c_{k-1}]`.
pub(super) fn next_catalog_coefficient(
    node: &Node,
    k: usize,
    prev: &[Value],
    arith: Arith,
) -> Result<Value> {
    let ki = k as i64;
    let bits = arith.fixed_bits();
    let v = match node {
        // c_k = (1-a)^(k-1) a / k!  via  c_k = c_{k-1} (k-1-a) / k
        Node::Power { a } => {
            if k == 1 {
                Value::Exact(a.clone()).rounded(bits)
            } else {
                let factor = (BigRational::from_integer((k - 1).into()) - a)
                    / BigRational::from_integer(k.into());
                prev[k - 2].mul(&Value::Exact(factor))
            }
        }
        // c_k = binom(2k-2, k-1) / (2^(2k-1) k)
        Node::Sqrt => match arith {
            Arith::Exact => Value::Exact(BigRational::new(
                central_binomial(k - 1),
                pow2(2 * k - 1) * BigInt::from(k),
            )),
            Arith::Bits(_) if k == 1 => Value::ratio(1, 2).rounded(bits),
            Arith::Bits(_) => prev[k - 2].mul_ratio(2 * ki - 3, 2 * ki),
        },
        // c_k = 2 c'_{k+1} with c' the sqrt coefficients: binom(2k, k) / (4^k (k+1))
        Node::MobiusSqrt => match arith {
            Arith::Exact => Value::Exact(BigRational::new(
                central_binomial(k),
                pow2(2 * k) * BigInt::from(k + 1),
            )),
            Arith::Bits(_) if k == 1 => Value::ratio(1, 4).rounded(bits),
            Arith::Bits(_) => prev[k - 2].mul_ratio(2 * ki - 1, 2 * ki + 2),
        },
        // c_k = binom(2k, k) / (2^(2k+1) k ln 2)
        Node::Log2Sqrt { bits: configured } => {
            let b = arith.approx_bits(*configured);
            if k == 1 {
                let ln2 = Value::Approx(ln2_interval(b));
                Value::ratio(1, 4).div(&ln2)?
            } else {
                prev[k - 2].mul_ratio((2 * ki - 1) * (ki - 1), 2 * ki * ki)
            }
        }
        // c_k = y_{k-1}(1) / ((e-1) 2^k k!) with Bessel numbers y_j(1); in terms
        // of the coefficients, c_k = (2k-3)/(2k) c_{k-1} + c_{k-2} / (4k(k-1)).
        Node::ExpSqrt { bits: configured } => {
            let b = arith.approx_bits(*configured);
            match k {
                1 | 2 => {
                    let e1 = Value::Approx(e_minus_one_interval(b));
                    let s = if k == 1 { Value::ratio(1, 2) } else { Value::ratio(1, 4) };
                    s.div(&e1)?
                }
                _ => prev[k - 2]
                    .mul_ratio(2 * ki - 3, 2 * ki)
                    .add(&prev[k - 3].mul_ratio(1, 4 * ki * (ki - 1))),
            }
        }
        // c_1 = 0, c_k = 1 / (k (k-1))
        Node::Entropy => {
            if k == 1 {
                Value::zero()
            } else {
                Value::ratio(1, ki * (ki - 1))
            }
        }
        Node::Finite { coeffs } => match coeffs.get(k - 1) {
            Some(c) => Value::Exact(c.clone()),
            None => Value::zero(),
        },
        _ => unreachable!("combinator nodes are handled by the caller"),
    };
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Interval;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn sqrt_first_coefficients() {
        let s = CoefficientSeries::sqrt();
        assert_eq!(s.coefficient_at(1).unwrap(), Value::Exact(q(1, 2)));
        assert_eq!(s.coefficient_at(2).unwrap(), Value::Exact(q(1, 8)));
        assert_eq!(s.coefficient_at(3).unwrap(), Value::Exact(q(1, 16)));
        assert_eq!(s.partial_sum_at(3).unwrap(), Value::Exact(q(11, 16)));
    }

    #[test]
    fn entropy_starts_at_two() {
        let e = CoefficientSeries::entropy();
        assert_eq!(e.coefficient_at(1).unwrap(), Value::zero());
        assert_eq!(e.coefficient_at(2).unwrap(), Value::Exact(q(1, 2)));
        // Partial sums telescope to 1 - 1/K.
        assert_eq!(e.partial_sum_at(10).unwrap(), Value::Exact(q(9, 10)));
    }

    #[test]
    fn exp_sqrt_matches_bessel_numbers() {
        // y_0(1) = 1, y_1(1) = 2, y_2(1) = 7, y_3(1) = 37.
        let e1 = e_minus_one_interval(256);
        let s = CoefficientSeries::exp_sqrt();
        for (k, y, den) in [(1, 1, 2), (2, 2, 8), (3, 7, 48), (4, 37, 384)] {
            let c = s.coefficient_at(k).unwrap();
            let expected = Interval::from_rational(&q(y, den), 256).div(&e1).unwrap();
            let Value::Approx(ci) = c else { panic!("expected interval") };
            assert!(ci.lo() <= expected.hi() && expected.lo() <= ci.hi(), "k={k}");
            assert!((ci.midpoint_f64() - expected.midpoint_f64()).abs() < 1e-60);
        }
    }

    #[test]
    fn exactness_flags() {
        assert_eq!(CoefficientSeries::sqrt().exactness(), super::super::Exactness::ExactRational);
        assert_eq!(
            CoefficientSeries::log2_sqrt().exactness(),
            super::super::Exactness::TrackedPrecision
        );
        assert_eq!(
            CoefficientSeries::exp_sqrt().exactness(),
            super::super::Exactness::TrackedPrecision
        );
    }

    #[test]
    fn parameter_checks() {
        assert!(CoefficientSeries::power(q(3, 2)).is_err());
        assert!(CoefficientSeries::power(q(0, 1)).is_err());
        assert!(CoefficientSeries::power(q(1, 1)).is_err());
        assert!(CoefficientSeries::finite(vec![]).is_err());
        assert!(CoefficientSeries::finite(vec![q(0, 1)]).is_err());
        assert!(CoefficientSeries::finite(vec![q(1, 2)]).is_err());
        assert!(CoefficientSeries::finite(vec![q(3, 2), q(-1, 2)]).is_err());
        assert!(CoefficientSeries::finite(vec![q(1, 2), q(3, 4)]).is_err());
        let f = CoefficientSeries::finite(vec![q(1, 2), q(1, 2), q(0, 1)]).unwrap();
        assert_eq!(f.terminal_index(), Some(2));
    }

    #[test]
    fn bits_mode_encloses_exact_values() {
        for s in [
            CoefficientSeries::sqrt(),
            CoefficientSeries::mobius_sqrt(),
            CoefficientSeries::power(q(1, 3)).unwrap(),
            CoefficientSeries::entropy(),
        ] {
            for k in 1..=40 {
                let exact = s.coefficient_at(k).unwrap();
                let approx = s.coefficient_in(k, Arith::Bits(96)).unwrap();
                let Value::Approx(i) = approx else { panic!("expected interval") };
                assert!(i.contains(exact.as_exact().unwrap()), "{s} k={k}");
            }
        }
    }
}
