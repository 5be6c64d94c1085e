//! Property tests for the structural invariants.

use bernoulli_factory::analysis::eval_f;
use bernoulli_factory::expr::{parse_expression, FactoryExpr, SeriesExpr};
use bernoulli_factory::nonrand::{von_neumann_bit, DigitOracle};
use bernoulli_factory::numeric::{DyadicConvention, Value};
use bernoulli_factory::series::{
    coefficients_from_stopping, compose, convex_combination, product_complement,
    stopping_from_coefficients, CoefficientSeries, StoppingSequence,
};
use bernoulli_factory::source::ScriptedCoins;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// Rationals in the open unit interval.
fn unit_open() -> impl Strategy<Value = BigRational> {
    (2i64..200).prop_flat_map(|d| (1..d).prop_map(move |n| q(n, d)))
}

/// Non-negative weights summing to one, with at least one positive entry.
fn distribution() -> impl Strategy<Value = Vec<BigRational>> {
    prop::collection::vec(0i64..6, 1..8)
        .prop_filter("some weight", |w| w.iter().any(|&x| x > 0))
        .prop_map(|w| {
            let total: i64 = w.iter().sum();
            w.into_iter().map(|x| q(x, total)).collect()
        })
}

fn leaf() -> impl Strategy<Value = SeriesExpr> {
    prop_oneof![
        unit_open().prop_map(SeriesExpr::Power),
        Just(SeriesExpr::Sqrt),
        Just(SeriesExpr::MobiusSqrt),
        Just(SeriesExpr::Log2Sqrt),
        Just(SeriesExpr::ExpSqrt),
        Just(SeriesExpr::Entropy),
        distribution().prop_map(SeriesExpr::Finite),
    ]
}

fn series_expr() -> impl Strategy<Value = SeriesExpr> {
    leaf().prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), 1usize..12).prop_map(|(a, b, order)| SeriesExpr::Compose {
                inner: Box::new(a),
                outer: Box::new(b),
                order
            }),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| SeriesExpr::Pc(Box::new(a), Box::new(b))),
            (inner.clone(), inner, unit_open())
                .prop_map(|(a, b, w)| SeriesExpr::Convex(Box::new(a), Box::new(b), w)),
        ]
    })
}

fn factory_expr() -> impl Strategy<Value = FactoryExpr> {
    let base = prop_oneof![
        3 => series_expr().prop_map(FactoryExpr::Series),
        1 => leaf().prop_map(FactoryExpr::Baseline),
    ];
    base.prop_recursive(3, 10, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|f| FactoryExpr::Complement(Box::new(f))),
            inner.clone().prop_map(|f| FactoryExpr::FlipInput(Box::new(f))),
            (inner.clone(), unit_open()).prop_map(|(f, a)| FactoryExpr::Scale(Box::new(f), a)),
            (inner.clone(), inner).prop_map(|(a, b)| FactoryExpr::Prod(Box::new(a), Box::new(b))),
        ]
    })
}

/// `j`-th binary digit of `r` in `[0, 1]` by long division; `1` reads as `0.111...`.
fn long_division_digit(r: &BigRational, j: u64) -> bool {
    if r.is_one() {
        return true;
    }
    let (mut num, den) = (r.numer().clone(), r.denom().clone());
    let mut bit = false;
    for _ in 0..j {
        num *= 2;
        bit = num >= den;
        if bit {
            num -= &den;
        }
    }
    bit
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn finite_round_trip(c in distribution()) {
        let s = CoefficientSeries::finite(c.clone()).unwrap();
        let back = coefficients_from_stopping(&stopping_from_coefficients(&s));
        for k in 1..=c.len() + 3 {
            prop_assert_eq!(s.coefficient_at(k).unwrap(), back.coefficient_at(k).unwrap());
        }
        prop_assert!(s.partial_sum_at(c.len()).unwrap().is_exact_one());
    }

    #[test]
    fn stopping_round_trip(mut d in prop::collection::vec(unit_open(), 0..10)) {
        d.push(BigRational::one());
        let stops = StoppingSequence::from_list(d.clone()).unwrap();
        let c = coefficients_from_stopping(&stops);
        let again = stopping_from_coefficients(&c);
        let mut sum = BigRational::zero();
        for k in 1..=d.len() {
            prop_assert_eq!(again.d_at(k).unwrap(), Value::Exact(d[k - 1].clone()));
            match c.coefficient_at(k).unwrap() {
                Value::Exact(ck) => { prop_assert!(ck >= BigRational::zero()); sum += ck; }
                other => prop_assert!(false, "inexact {:?}", other),
            }
        }
        prop_assert!(sum.is_one());
    }

    #[test]
    fn power_stops_are_a_over_k(a in unit_open()) {
        let c = CoefficientSeries::power(a.clone()).unwrap();
        let general = StoppingSequence::from_series_general(&c);
        for k in 1..=20usize {
            let want = Value::Exact(&a / BigRational::from_integer(k.into()));
            prop_assert_eq!(general.d_at(k).unwrap(), want);
        }
    }

    #[test]
    fn combinators_keep_coefficients_valid(a in leaf(), b in leaf(), w in unit_open(), order in 1usize..10) {
        let (a, b) = (a.build().unwrap(), b.build().unwrap());
        for s in [
            compose(&a, &b, order).unwrap(),
            product_complement(&a, &b),
            convex_combination(&a, &b, w).unwrap(),
        ] {
            for k in 1..=32 {
                prop_assert!(s.coefficient_at(k).unwrap().possibly_nonnegative(), "{} k={}", s, k);
            }
            prop_assert!(s.partial_sum_at(32).unwrap().lower() <= BigRational::one(), "{}", s);
        }
    }

    #[test]
    fn digits_match_long_division(n in 0i64..1000, extra in 0i64..1000, j in 1u64..300) {
        let d = n + extra + 1;
        let r = q(n, d);
        let stops = StoppingSequence::from_list(vec![r.clone(), BigRational::one()]).unwrap();
        let oracle = DigitOracle::new(stops);
        prop_assert_eq!(oracle.digit_at(1, j).unwrap(), long_division_digit(&r, j), "{} digit {}", r, j);
    }

    #[test]
    fn dyadic_conventions_differ_only_in_the_tail(k in 0u32..20, m in 0u64..(1 << 20), j in 1u64..80) {
        let den = BigInt::one() << k;
        let r = BigRational::new(BigInt::from(m) % &den, den.clone());
        let stops = StoppingSequence::from_list(vec![r.clone(), BigRational::one()]).unwrap();
        let zeros = DigitOracle::with_settings(stops.clone(), DyadicConvention::TrailingZeros, 4096);
        let ones = DigitOracle::with_settings(stops, DyadicConvention::TrailingOnes, 4096);
        let value = |o: &DigitOracle| -> BigRational {
            (1..=80u64)
                .filter(|&i| o.digit_at(1, i).unwrap())
                .map(|i| BigRational::new(1.into(), BigInt::one() << i))
                .sum()
        };
        let tiny = BigRational::new(1.into(), BigInt::one() << 80u32);
        prop_assert_eq!(value(&zeros), r.clone());
        if !r.is_zero() {
            prop_assert_eq!(value(&ones) + tiny, r.clone());
        }
        if j <= k as u64 && !r.is_zero() {
            let last = (1..=k as u64).rev().find(|&i| zeros.digit_at(1, i).unwrap()).unwrap();
            if j < last {
                prop_assert_eq!(zeros.digit_at(1, j).unwrap(), ones.digit_at(1, j).unwrap());
            }
        }
    }

    #[test]
    fn fair_bit_is_the_first_coin_of_the_first_unequal_pair(equal in prop::collection::vec(any::<bool>(), 0..20), first in any::<bool>()) {
        let mut bits = Vec::new();
        for &b in &equal {
            bits.extend([b, b]);
        }
        bits.extend([first, !first]);
        let mut coins = ScriptedCoins::new(bits.clone());
        let (bit, pairs) = von_neumann_bit(&mut coins);
        prop_assert_eq!(bit, first);
        prop_assert_eq!(pairs, equal.len() as u64 + 1);
        prop_assert_eq!(coins.consumed(), bits.len());
    }

    #[test]
    fn expressions_print_and_parse_back(e in factory_expr()) {
        let text = e.to_string();
        let parsed = parse_expression(&text).unwrap();
        prop_assert_eq!(&parsed, &e);
        prop_assert_eq!(parsed.to_string(), text);
    }

    #[test]
    fn evaluation_is_monotone_in_p(e in leaf(), a in 1u32..99, b in 1u32..99) {
        prop_assume!(a != b);
        let (lo, hi) = (a.min(b) as f64 / 100.0, a.max(b) as f64 / 100.0);
        let c = e.build().unwrap();
        let (f_lo, f_hi) = (eval_f(&c, lo, 1e-10).unwrap(), eval_f(&c, hi, 1e-10).unwrap());
        prop_assert!(f_lo.lower() <= f_hi.upper());
        prop_assert!(f_lo.lower() >= -1e-12 && f_hi.upper() <= 1.0 + 1e-12);
    }
}
