//! Exact rationals and outward-rounded dyadic intervals.
//!
//! Every coefficient, partial sum and stopping probability handled by the
//! library is a [`Value`]: either an exact [`BigRational`] or an [`Interval`]
//! with dyadic endpoints that is guaranteed to contain the true real number.
//! Interval operations round the lower endpoint down and the upper endpoint
//! up, so enclosures stay valid through any chain of arithmetic.

use std::borrow::Cow;
use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Fractional bits used for non-rational coefficients unless configured otherwise.
pub const DEFAULT_PRECISION_BITS: u32 = 256;

/// Largest precision the digit machinery escalates to before giving up.
pub const DEFAULT_DIGIT_CEILING: u32 = 4096;

fn pow2(bits: u32) -> BigInt {
    BigInt::one() << bits as usize
}

fn ceil_div(num: &BigInt, den: &BigInt) -> BigInt {
    -((-num).div_floor(den))
}

/// Closed interval `[lo, hi] * 2^-bits`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: BigInt,
    hi: BigInt,
    bits: u32,
}

impl Interval {
    pub fn from_mantissas(lo: BigInt, hi: BigInt, bits: u32) -> Self {
        debug_assert!(lo <= hi);
        Interval { lo, hi, bits }
    }

    /// Smallest dyadic interval at `bits` fractional bits containing `r`.
    pub fn from_rational(r: &BigRational, bits: u32) -> Self {
        let scaled = r.numer() * pow2(bits);
        let lo = scaled.div_floor(r.denom());
        let hi = ceil_div(&scaled, r.denom());
        Interval { lo, hi, bits }
    }

    pub fn point(r: &BigRational, bits: u32) -> Self {
        Self::from_rational(r, bits)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn lo(&self) -> BigRational {
        BigRational::new(self.lo.clone(), pow2(self.bits))
    }

    pub fn hi(&self) -> BigRational {
        BigRational::new(self.hi.clone(), pow2(self.bits))
    }

    pub fn width(&self) -> BigRational {
        BigRational::new(&self.hi - &self.lo, pow2(self.bits))
    }

    /// Re-express at `bits` fractional bits, rounding outward when coarsening.
    pub fn at_bits(&self, bits: u32) -> Interval {
        match bits.cmp(&self.bits) {
            Ordering::Equal => self.clone(),
            Ordering::Greater => {
                let shift = (bits - self.bits) as usize;
                Interval {
                    lo: &self.lo << shift,
                    hi: &self.hi << shift,
                    bits,
                }
            }
            Ordering::Less => {
                let shift = (self.bits - bits) as usize;
                Interval {
                    lo: &self.lo >> shift,
                    hi: -((-&self.hi) >> shift),
                    bits,
                }
            }
        }
    }

    fn aligned<'a>(a: &'a Interval, b: &'a Interval) -> (Cow<'a, Interval>, Cow<'a, Interval>, u32) {
        let bits = a.bits.max(b.bits);
        let lift = |x: &'a Interval| {
            if x.bits == bits {
                Cow::Borrowed(x)
            } else {
                Cow::Owned(x.at_bits(bits))
            }
        };
        (lift(a), lift(b), bits)
    }

    pub fn add(&self, other: &Interval) -> Interval {
        let (a, b, bits) = Self::aligned(self, other);
        Interval {
            lo: &a.lo + &b.lo,
            hi: &a.hi + &b.hi,
            bits,
        }
    }

    pub fn neg(&self) -> Interval {
        Interval {
            lo: -&self.hi,
            hi: -&self.lo,
            bits: self.bits,
        }
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        let (a, b, bits) = Self::aligned(self, other);
        let shift = bits as usize;
        // Shifting a BigInt right rounds toward negative infinity.
        let floor = |x: BigInt| x >> shift;
        let ceil = |x: BigInt| -((-x) >> shift);
        if !a.lo.is_negative() && !b.lo.is_negative() {
            return Interval {
                lo: floor(&a.lo * &b.lo),
                hi: ceil(&a.hi * &b.hi),
                bits,
            };
        }
        let mut products = [&a.lo * &b.lo, &a.lo * &b.hi, &a.hi * &b.lo, &a.hi * &b.hi];
        products.sort();
        let [min, _, _, max] = products;
        Interval {
            lo: floor(min),
            hi: ceil(max),
            bits,
        }
    }

    /// Fails with [`Error::InsufficientPrecision`] when the divisor straddles zero.
    pub fn div(&self, other: &Interval) -> Result<Interval> {
        let (a, b, bits) = Self::aligned(self, other);
        if b.lo.sign() != b.hi.sign() || b.lo.is_zero() || b.hi.is_zero() {
            return Err(Error::InsufficientPrecision {
                what: "interval divisor contains zero".into(),
                bits,
            });
        }
        let scale = pow2(bits);
        let nums = [&a.lo * &scale, &a.hi * &scale];
        let mut lo: Option<BigInt> = None;
        let mut hi: Option<BigInt> = None;
        for n in &nums {
            for d in [&b.lo, &b.hi] {
                let (fl, cl) = if d.is_negative() {
                    let (nn, dd) = (-n, -d);
                    (nn.div_floor(&dd), ceil_div(&nn, &dd))
                } else {
                    (n.div_floor(d), ceil_div(n, d))
                };
                lo = Some(match lo {
                    Some(cur) if cur <= fl => cur,
                    _ => fl,
                });
                hi = Some(match hi {
                    Some(cur) if cur >= cl => cur,
                    _ => cl,
                });
            }
        }
        Ok(Interval {
            lo: lo.unwrap(),
            hi: hi.unwrap(),
            bits,
        })
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    pub fn contains(&self, r: &BigRational) -> bool {
        &self.lo() <= r && r <= &self.hi()
    }

    /// Intersection with `[0, 1]`; unchanged if the two are disjoint.
    pub fn clamp_unit(&self) -> Interval {
        let one = BigInt::one() << self.bits;
        let lo = self.lo.clone().max(BigInt::zero());
        let hi = self.hi.clone().min(one);
        if lo > hi {
            return self.clone();
        }
        Interval::from_mantissas(lo, hi, self.bits)
    }

    pub fn midpoint_f64(&self) -> f64 {
        let mid = BigRational::new(&self.lo + &self.hi, pow2(self.bits + 1));
        mid.to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{:e}, {:e}]",
            self.lo().to_f64().unwrap_or(f64::NAN),
            self.hi().to_f64().unwrap_or(f64::NAN)
        )
    }
}

/// Binary-expansion convention for dyadic rationals, which have two expansions.
///
/// `1` is always expanded as `0.111...` and `0` as `0.000...`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DyadicConvention {
    /// `0.75 -> 0.11000...`
    #[default]
    TrailingZeros,
    /// `0.75 -> 0.10111...`
    TrailingOnes,
}

/// Where the binary expansion of a value becomes constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Trail {
    /// 1-based digit position from which every digit equals `digit`.
    pub start: u64,
    pub digit: bool,
}

/// A real number known either exactly or through a guaranteed enclosure.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Exact(BigRational),
    Approx(Interval),
}

impl Value {
    pub fn zero() -> Value {
        Value::Exact(BigRational::zero())
    }

    pub fn one() -> Value {
        Value::Exact(BigRational::one())
    }

    pub fn ratio(num: i64, den: i64) -> Value {
        Value::Exact(BigRational::new(num.into(), den.into()))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Value::Exact(r) => Some(r),
            Value::Approx(_) => None,
        }
    }

    /// Enclosure at `bits` fractional bits (exact values are rounded outward).
    pub fn to_interval(&self, bits: u32) -> Interval {
        match self {
            Value::Exact(r) => Interval::from_rational(r, bits),
            Value::Approx(i) => i.at_bits(bits.max(i.bits)),
        }
    }

    /// Rounds exact values to intervals when `bits` is given; used by the
    /// fixed-precision evaluation mode.
    pub fn rounded(self, bits: Option<u32>) -> Value {
        match (self, bits) {
            (Value::Exact(r), Some(b)) => Value::Approx(Interval::from_rational(&r, b)),
            (v, _) => v,
        }
    }

    fn binary(
        &self,
        other: &Value,
        exact: impl FnOnce(&BigRational, &BigRational) -> BigRational,
        approx: impl FnOnce(&Interval, &Interval) -> Interval,
    ) -> Value {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(exact(a, b)),
            (Value::Approx(a), Value::Approx(b)) => Value::Approx(approx(a, b)),
            (Value::Approx(a), Value::Exact(b)) => {
                Value::Approx(approx(a, &Interval::from_rational(b, a.bits)))
            }
            (Value::Exact(a), Value::Approx(b)) => {
                Value::Approx(approx(&Interval::from_rational(a, b.bits), b))
            }
        }
    }

    pub fn add(&self, other: &Value) -> Value {
        self.binary(other, |a, b| a + b, Interval::add)
    }

    pub fn sub(&self, other: &Value) -> Value {
        self.binary(other, |a, b| a - b, Interval::sub)
    }

    pub fn mul(&self, other: &Value) -> Value {
        self.binary(other, |a, b| a * b, Interval::mul)
    }

    pub fn div(&self, other: &Value) -> Result<Value> {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => {
                if b.is_zero() {
                    Err(Error::DivisionByZero)
                } else {
                    Ok(Value::Exact(a / b))
                }
            }
            (Value::Approx(a), Value::Exact(b)) => {
                Ok(Value::Approx(a.div(&Interval::from_rational(b, a.bits))?))
            }
            (Value::Exact(a), Value::Approx(b)) => {
                Ok(Value::Approx(Interval::from_rational(a, b.bits).div(b)?))
            }
            (Value::Approx(a), Value::Approx(b)) => Ok(Value::Approx(a.div(b)?)),
        }
    }

    pub fn mul_ratio(&self, num: i64, den: i64) -> Value {
        self.mul(&Value::ratio(num, den))
    }

    pub fn lower(&self) -> BigRational {
        match self {
            Value::Exact(r) => r.clone(),
            Value::Approx(i) => i.lo(),
        }
    }

    pub fn upper(&self) -> BigRational {
        match self {
            Value::Exact(r) => r.clone(),
            Value::Approx(i) => i.hi(),
        }
    }

    /// True when the value is certainly `>= 0`.
    pub fn certainly_nonnegative(&self) -> bool {
        !self.lower().is_negative()
    }

    /// True when the value may be `>= 0` (the enclosure reaches non-negative reals).
    pub fn possibly_nonnegative(&self) -> bool {
        !self.upper().is_negative()
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self, Value::Exact(r) if r.is_zero())
    }

    pub fn is_exact_one(&self) -> bool {
        matches!(self, Value::Exact(r) if r.is_one())
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Value::Approx(i) => i.midpoint_f64(),
        }
    }

    /// Digits `64*block + 1 ..= 64*block + 64` of the binary expansion of a value
    /// in `[0, 1]`, most significant digit in the top bit. `None` means the
    /// enclosure is too wide to decide them.
    pub fn digit_block(&self, block: u32, convention: DyadicConvention) -> Option<u64> {
        let shift = 64 * (block + 1);
        match self {
            Value::Exact(r) => Some(exact_block(r, shift, convention)),
            Value::Approx(i) if i.lo == i.hi => Some(exact_block(&i.lo(), shift, convention)),
            Value::Approx(i) => {
                // Scaling up is exact, so a non-degenerate enclosure cannot pin the digits.
                if shift >= i.bits {
                    return None;
                }
                let d = pow2(i.bits - shift);
                let (lo, hi) = match convention {
                    DyadicConvention::TrailingZeros => (i.lo.div_floor(&d), i.hi.div_floor(&d)),
                    DyadicConvention::TrailingOnes => {
                        (ceil_div(&i.lo, &d) - 1u32, ceil_div(&i.hi, &d) - 1u32)
                    }
                };
                if lo != hi || lo.is_negative() || lo >= pow2(shift) {
                    return None;
                }
                Some(low_word(&lo))
            }
        }
    }

    /// Position from which the expansion is constant, for exact dyadic values.
    pub fn trail(&self, convention: DyadicConvention) -> Option<Trail> {
        let r = self.as_exact()?;
        if r.is_zero() {
            return Some(Trail { start: 1, digit: false });
        }
        if r.is_one() {
            return Some(Trail { start: 1, digit: true });
        }
        let den = r.denom();
        let e = den.bits() - 1;
        if den != &pow2(e as u32) {
            return None;
        }
        Some(Trail {
            start: e + 1,
            digit: convention == DyadicConvention::TrailingOnes,
        })
    }
}

fn low_word(x: &BigInt) -> u64 {
    x.magnitude().iter_u64_digits().next().unwrap_or(0)
}

fn exact_block(r: &BigRational, shift: u32, convention: DyadicConvention) -> u64 {
    if r.is_one() {
        return u64::MAX;
    }
    if r.is_zero() || r.is_negative() {
        return 0;
    }
    let scaled = r.numer() << shift as usize;
    let digits = match convention {
        DyadicConvention::TrailingZeros => scaled.div_floor(r.denom()),
        DyadicConvention::TrailingOnes => ceil_div(&scaled, r.denom()) - 1u32,
    };
    low_word(&digits)
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(r) => write!(f, "{r}"),
            Value::Approx(i) => write!(f, "{i}"),
        }
    }
}

/// Exact rational equal to a finite `f64`.
pub fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

/// Parses `"3/4"`, `"7"` or a decimal such as `"0.375"` / `"1e-3"` into an exact rational.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let t = text.trim();
    if t.is_empty() {
        return None;
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(pos) => (&t[..pos], t[pos + 1..].parse::<i32>().ok()?),
        None => (t, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let mut r = if scale >= 0 {
        BigRational::from_integer(digits * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(digits, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        r = -r;
    }
    Some(r)
}

/// Guard bits carried by the constant evaluations below.
const GUARD_BITS: u32 = 64;

/// Enclosure of `ln 2` at `bits` fractional bits, from `ln 2 = sum 1/(k 2^k)`.
pub fn ln2_interval(bits: u32) -> Interval {
    let w = bits + GUARD_BITS;
    let mut sum = BigInt::zero();
    let mut terms: u64 = 0;
    // Each truncated term is low by less than one ulp; the tail past k = w is
    // below 2^-w.
    for k in 1..=w {
        let term = (BigInt::one() << (w - k) as usize) / BigInt::from(k);
        sum += term;
        terms += 1;
    }
    let lo = sum.clone();
    let hi = sum + BigInt::from(terms + 1);
    Interval::from_mantissas(lo, hi, w).at_bits(bits)
}

/// Enclosure of `e - 1` at `bits` fractional bits, from `e - 1 = sum_{k>=1} 1/k!`.
pub fn e_minus_one_interval(bits: u32) -> Interval {
    let w = bits + GUARD_BITS;
    let mut term = BigInt::one() << w as usize;
    let mut sum = BigInt::zero();
    let mut k: u64 = 0;
    // Repeated floor division leaves each term at most two ulps low. Once a
    // term drops below one ulp the remaining tail is below two ulps.
    loop {
        k += 1;
        term /= BigInt::from(k);
        if term.is_zero() {
            break;
        }
        sum += &term;
    }
    let lo = sum.clone();
    let hi = sum + BigInt::from(2 * k + 4);
    Interval::from_mantissas(lo, hi, w).at_bits(bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn interval_products_enclose_exact_products() {
        let vals = [q(-7, 3), q(-1, 5), q(0, 1), q(2, 9), q(5, 4)];
        for a in &vals {
            for b in &vals {
                for (ia, ib) in [
                    (Interval::from_rational(a, 20), Interval::from_rational(b, 20)),
                    (Interval::from_rational(a, 12), Interval::from_rational(b, 30)),
                ] {
                    let prod = ia.mul(&ib);
                    assert!(prod.contains(&(a * b)), "{a} * {b}");
                    assert!(prod.width() <= q(1, 1 << 10));
                    assert!(ia.add(&ib).contains(&(a + b)));
                }
                let coarse = Interval::from_rational(a, 40).at_bits(7);
                assert!(coarse.contains(a) && coarse.bits() == 7);
            }
        }
        let wide = Interval::from_mantissas((-3).into(), 5.into(), 2).mul(&Interval::from_mantissas((-2).into(), 1.into(), 2));
        // [-10/16, 6/16] rounded outward to quarters.
        assert_eq!((wide.lo(), wide.hi()), (q(-3, 4), q(1, 2)));
    }

    #[test]
    fn constants_enclose_reference_values() {
        let ln2 = ln2_interval(128);
        let e1 = e_minus_one_interval(128);
        assert!(ln2.lo().to_f64().unwrap() <= std::f64::consts::LN_2 + 1e-16);
        assert!(ln2.hi().to_f64().unwrap() >= std::f64::consts::LN_2 - 1e-16);
        assert!((e1.midpoint_f64() - (std::f64::consts::E - 1.0)).abs() < 1e-15);
        // Width shrinks with precision.
        assert!(ln2_interval(512).width() < ln2.width());
        assert!(ln2.width() <= q(1, 1) / BigRational::from_integer(pow2(126)));
    }

    #[test]
    fn constants_are_nested_across_precisions() {
        let coarse = e_minus_one_interval(64);
        let fine = e_minus_one_interval(1024);
        assert!(coarse.lo() <= fine.lo() && fine.hi() <= coarse.hi());
    }

    #[test]
    fn exact_blocks_follow_convention() {
        let three_quarters = Value::Exact(q(3, 4));
        assert_eq!(
            three_quarters.digit_block(0, DyadicConvention::TrailingZeros),
            Some(0b11u64 << 62)
        );
        assert_eq!(
            three_quarters.digit_block(0, DyadicConvention::TrailingOnes),
            Some((0b10u64 << 62) | ((1u64 << 62) - 1))
        );
        assert_eq!(Value::one().digit_block(3, DyadicConvention::TrailingZeros), Some(u64::MAX));
        assert_eq!(Value::zero().digit_block(0, DyadicConvention::TrailingOnes), Some(0));
        let third = Value::Exact(q(1, 3));
        assert_eq!(
            third.digit_block(0, DyadicConvention::TrailingZeros),
            Some(0x5555_5555_5555_5555)
        );
        assert_eq!(
            third.digit_block(1, DyadicConvention::TrailingZeros),
            Some(0x5555_5555_5555_5555)
        );
    }

    #[test]
    fn trail_positions() {
        let z = DyadicConvention::TrailingZeros;
        assert_eq!(Value::Exact(q(3, 4)).trail(z), Some(Trail { start: 3, digit: false }));
        assert_eq!(
            Value::Exact(q(3, 4)).trail(DyadicConvention::TrailingOnes),
            Some(Trail { start: 3, digit: true })
        );
        assert_eq!(Value::one().trail(z), Some(Trail { start: 1, digit: true }));
        assert_eq!(Value::Exact(q(1, 3)).trail(z), None);
    }

    #[test]
    fn interval_blocks_need_enough_width() {
        let third = Interval::from_rational(&q(1, 3), 256);
        let v = Value::Approx(third);
        assert_eq!(v.digit_block(0, DyadicConvention::TrailingZeros), Some(0x5555_5555_5555_5555));
        let coarse = Value::Approx(Interval::from_rational(&q(1, 3), 40));
        assert_eq!(coarse.digit_block(0, DyadicConvention::TrailingZeros), None);
    }

    #[test]
    fn interval_division_rejects_zero_straddle() {
        let a = Interval::from_rational(&q(1, 2), 64);
        let b = Interval::from_mantissas(BigInt::from(-1), BigInt::from(1), 64);
        assert!(matches!(a.div(&b), Err(Error::InsufficientPrecision { .. })));
        let c = Interval::from_rational(&q(1, 3), 64);
        let r = a.div(&c).unwrap();
        assert!(r.contains(&q(3, 2)));
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("3/4"), Some(q(3, 4)));
        assert_eq!(parse_rational("0.375"), Some(q(3, 8)));
        assert_eq!(parse_rational("1e-3"), Some(q(1, 1000)));
        assert_eq!(parse_rational("2.5E1"), Some(q(25, 1)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational(""), None);
    }

    #[test]
    fn mixed_value_arithmetic_stays_enclosing() {
        let ln2 = Value::Approx(ln2_interval(128));
        let quarter = Value::Exact(q(1, 4));
        let c1 = quarter.div(&ln2).unwrap();
        assert!((c1.to_f64() - 0.25 / std::f64::consts::LN_2).abs() < 1e-15);
        let back = c1.mul(&ln2);
        assert!(matches!(&back, Value::Approx(i) if i.contains(&q(1, 4))));
    }
}
