//! The factory without auxiliary uniforms.
//!
//! Each stop decision `V_i ~ Bernoulli(d_i)` is built from the input coins:
//! draw fair bits `T` by von Neumann's trick (pairs of coins until the two
//! differ, keep the first) and stop at the first `T = 1`; if that happens on
//! attempt `j`, `V_i` is the `j`-th binary digit of `d_i`. Since attempt `j`
//! is reached with probability `2^-j`, `Pr[V_i = 1] = d_i`.

use std::sync::Arc;

use crate::error::Result;
use crate::factory::{Decider, Engine};
use crate::numeric::{DyadicConvention, DEFAULT_DIGIT_CEILING};
use crate::series::{DigitTable, Head, StoppingSequence};
use crate::source::{CoinSource, NoUniforms};

/// Binary digits of every `d_k`, memoised and safe to share between threads.
///
/// `d_k = 1` is read as `0.111...` and `d_k = 0` as `0.000...` under either
/// convention; other dyadic values follow the chosen convention.
#[derive(Clone)]
pub struct DigitOracle {
    stops: StoppingSequence,
    table: Arc<DigitTable>,
}

impl DigitOracle {
    /// Trailing-zeros convention and the default precision ceiling, sharing
    /// the digit table already attached to `stops`.
    pub fn new(stops: StoppingSequence) -> Self {
        let table = stops.digits().clone();
        DigitOracle { stops, table }
    }

    pub fn with_settings(stops: StoppingSequence, convention: DyadicConvention, ceiling: u32) -> Self {
        if convention == DyadicConvention::TrailingZeros && ceiling == DEFAULT_DIGIT_CEILING {
            return Self::new(stops);
        }
        DigitOracle {
            stops,
            table: Arc::new(DigitTable::new(convention, ceiling)),
        }
    }

    pub fn stops(&self) -> &StoppingSequence {
        &self.stops
    }

    pub fn convention(&self) -> DyadicConvention {
        self.table.convention()
    }

    pub fn ceiling(&self) -> u32 {
        self.table.ceiling()
    }

    /// First 64 digits of `d_k`.
    pub fn head(&self, k: usize) -> Result<&Head> {
        self.table.head(&self.stops, k)
    }

    /// Digits `64 b + 1 ..= 64 b + 64` of `d_k`.
    pub fn block(&self, k: usize, b: u32) -> Result<u64> {
        self.table.block(&self.stops, k, b)
    }

    /// Digit `j >= 1` of `d_k`.
    pub fn digit_at(&self, k: usize, j: u64) -> Result<bool> {
        self.table.digit(&self.stops, k, j)
    }
}

pub fn digit_oracle_from(
    d: &StoppingSequence,
    convention: DyadicConvention,
    precision_ceiling: u32,
) -> DigitOracle {
    DigitOracle::with_settings(d.clone(), convention, precision_ceiling)
}

/// One fair bit and the number of coin pairs it took.
pub fn von_neumann_bit<C: CoinSource>(coins: &mut C) -> (bool, u64) {
    let mut pairs = 0;
    loop {
        pairs += 1;
        let a = coins.next_bit();
        let b = coins.next_bit();
        if a != b {
            return (a, pairs);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NonRandOutcome {
    pub y: bool,
    /// Every coin read: one per outer iteration plus two per pair.
    pub n_total: u64,
    /// Outer iterations; distributed like the randomized sampler's `N`.
    pub n_outer: u64,
    pub pairs: u64,
    /// Pairs spent on each outer iteration, when requested.
    pub pair_counts: Option<Vec<u64>>,
}

/// Non-randomized sampler for the series behind `oracle`. The stop bit is
/// generated on every iteration, also when `X_i = 1`; with `dyadic_shortcut`
/// it is read off directly once the remaining digits of `d_i` are constant.
pub fn sample_algorithm2<C: CoinSource>(
    oracle: &DigitOracle,
    coins: &mut C,
    dyadic_shortcut: bool,
) -> Result<NonRandOutcome> {
    run(oracle, coins, dyadic_shortcut, false)
}

/// [`sample_algorithm2`] also reporting pairs per iteration.
pub fn sample_algorithm2_traced<C: CoinSource>(
    oracle: &DigitOracle,
    coins: &mut C,
    dyadic_shortcut: bool,
) -> Result<NonRandOutcome> {
    run(oracle, coins, dyadic_shortcut, true)
}

fn run<C: CoinSource>(
    oracle: &DigitOracle,
    coins: &mut C,
    dyadic_shortcut: bool,
    traced: bool,
) -> Result<NonRandOutcome> {
    let mut engine = Engine::<C, NoUniforms>::new(coins, Decider::Fair { dyadic_shortcut });
    if traced {
        engine.trace = Some(Vec::new());
    }
    let y = engine.series(oracle)?;
    let pair_counts = engine
        .trace
        .take()
        .map(|t| t.iter().map(|e| e.pairs).collect());
    let draw = engine.finish(y);
    Ok(NonRandOutcome {
        y,
        n_total: draw.inputs,
        n_outer: draw.outer,
        pairs: draw.pairs,
        pair_counts,
    })
}
