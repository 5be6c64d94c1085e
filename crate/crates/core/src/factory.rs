//! Samplers: the early-stopping factory, the two-phase baseline and the
//! output/input transforms built on top of them.
//!
//! One engine runs every factory tree in either of two modes. In randomized
//! mode the stop decision `V_i ~ Bernoulli(d_i)` compares a uniform with `d_i`
//! digit block by digit block. In non-randomized mode it draws fair bits from
//! pairs of input coins and reads one binary digit of `d_i` (see
//! [`crate::nonrand`]); that mode is typed so that it cannot reach a uniform
//! source at all.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed};

use crate::error::{Error, Result};
use crate::nonrand::DigitOracle;
use crate::numeric::{DyadicConvention, Value};
use crate::series::{stopping_from_coefficients, CoefficientSeries, StoppingSequence};
use crate::source::{CoinSource, NoUniforms, UniformSource};

/// Default cap on the auxiliary length `L` drawn by the baseline sampler.
pub const DEFAULT_BASELINE_CAP: u64 = 1_000_000;

/// One iteration of the outer loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Event {
    pub x: bool,
    /// `None` when the randomized sampler saw `X_i = 1` and skipped the draw.
    pub v: Option<bool>,
    /// Von Neumann pairs spent deciding `V_i` (zero in randomized mode).
    pub pairs: u64,
}

/// A single run of a series sampler.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactoryOutcome {
    pub y: bool,
    /// Input coins consumed.
    pub n: u64,
    /// Uniforms drawn (each may span several digit blocks).
    pub uniforms: u64,
    pub trace: Option<Vec<Event>>,
}

/// Counters for one run of a factory tree.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Draw {
    pub y: bool,
    /// All input coins consumed, including those spent on fair bits.
    pub inputs: u64,
    /// Outer-loop iterations across all series nodes (or `L` for the baseline).
    pub outer: u64,
    pub uniforms: u64,
    pub pairs: u64,
    /// Fair bits extracted by the von Neumann procedure.
    pub fair_bits: u64,
}

/// How stop decisions and scale coins are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Randomized,
    NonRandomized { dyadic_shortcut: bool },
}

/// An exact weight in `(0, 1]` used by [`transform_scale`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Weight {
    value: BigRational,
    head: u64,
}

impl Weight {
    pub fn new(value: BigRational) -> Result<Self> {
        if !value.is_positive() || value > BigRational::one() {
            return Err(Error::ParameterOutOfRange(format!(
                "scale weight alpha = {value} must lie in (0, 1]"
            )));
        }
        let head = Value::Exact(value.clone())
            .digit_block(0, DyadicConvention::TrailingZeros)
            .expect("exact");
        Ok(Weight { value, head })
    }

    pub fn value(&self) -> &BigRational {
        &self.value
    }

    fn target(&self) -> Target<'_> {
        Target::Exact {
            value: &self.value,
            head: self.head,
            trail: Value::Exact(self.value.clone())
                .trail(DyadicConvention::TrailingZeros)
                .map(|t| t.start),
        }
    }
}

/// A sampler for some function of `p`, assembled from series and transforms.
#[derive(Clone)]
pub enum Factory {
    /// The early-stopping sampler for a series.
    Series(DigitOracle),
    /// Draw `L ~ (c_k)` first, then read `L` coins; `y = 1` iff any coin is 1.
    Baseline { oracle: DigitOracle, cap: u64 },
    /// `1 - f(p)`.
    Complement(Box<Factory>),
    /// `f(1 - p)`.
    FlipInput(Box<Factory>),
    /// `alpha f(p)`; the weight coin is drawn first and the inner sampler
    /// runs only when it shows 1.
    Scale { inner: Box<Factory>, alpha: Weight },
    /// `f1(p) f2(p)`; the second sampler runs only when the first gives 1.
    Product(Box<Factory>, Box<Factory>),
}

pub fn transform_output_complement(inner: Factory) -> Factory {
    Factory::Complement(Box::new(inner))
}

pub fn transform_input_complement(inner: Factory) -> Factory {
    Factory::FlipInput(Box::new(inner))
}

pub fn transform_scale(inner: Factory, alpha: BigRational) -> Result<Factory> {
    Ok(Factory::Scale {
        inner: Box::new(inner),
        alpha: Weight::new(alpha)?,
    })
}

pub fn transform_product(first: Factory, second: Factory) -> Factory {
    Factory::Product(Box::new(first), Box::new(second))
}

impl Factory {
    pub fn series(c: &CoefficientSeries) -> Factory {
        Factory::Series(DigitOracle::new(stopping_from_coefficients(c)))
    }

    pub fn from_stopping(d: StoppingSequence) -> Factory {
        Factory::Series(DigitOracle::new(d))
    }

    pub fn baseline(c: &CoefficientSeries, cap: u64) -> Factory {
        Factory::Baseline {
            oracle: DigitOracle::new(stopping_from_coefficients(c)),
            cap,
        }
    }

    /// Rebuilds every digit oracle with the given convention and precision ceiling.
    pub fn with_digit_settings(&self, convention: DyadicConvention, ceiling: u32) -> Factory {
        let re = |o: &DigitOracle| DigitOracle::with_settings(o.stops().clone(), convention, ceiling);
        match self {
            Factory::Series(o) => Factory::Series(re(o)),
            Factory::Baseline { oracle, cap } => Factory::Baseline {
                oracle: re(oracle),
                cap: *cap,
            },
            Factory::Complement(f) => {
                Factory::Complement(Box::new(f.with_digit_settings(convention, ceiling)))
            }
            Factory::FlipInput(f) => {
                Factory::FlipInput(Box::new(f.with_digit_settings(convention, ceiling)))
            }
            Factory::Scale { inner, alpha } => Factory::Scale {
                inner: Box::new(inner.with_digit_settings(convention, ceiling)),
                alpha: alpha.clone(),
            },
            Factory::Product(a, b) => Factory::Product(
                Box::new(a.with_digit_settings(convention, ceiling)),
                Box::new(b.with_digit_settings(convention, ceiling)),
            ),
        }
    }

    /// Replaces every early-stopping node by the two-phase baseline.
    pub fn to_baseline(&self, cap: u64) -> Factory {
        match self {
            Factory::Series(o) => Factory::Baseline {
                oracle: o.clone(),
                cap,
            },
            Factory::Baseline { oracle, .. } => Factory::Baseline {
                oracle: oracle.clone(),
                cap,
            },
            Factory::Complement(f) => Factory::Complement(Box::new(f.to_baseline(cap))),
            Factory::FlipInput(f) => Factory::FlipInput(Box::new(f.to_baseline(cap))),
            Factory::Scale { inner, alpha } => Factory::Scale {
                inner: Box::new(inner.to_baseline(cap)),
                alpha: alpha.clone(),
            },
            Factory::Product(a, b) => {
                Factory::Product(Box::new(a.to_baseline(cap)), Box::new(b.to_baseline(cap)))
            }
        }
    }

    /// Sets the length cap of every baseline node.
    pub fn with_baseline_cap(&self, new_cap: u64) -> Factory {
        match self {
            Factory::Baseline { oracle, .. } => Factory::Baseline {
                oracle: oracle.clone(),
                cap: new_cap,
            },
            Factory::Series(_) => self.clone(),
            Factory::Complement(f) => Factory::Complement(Box::new(f.with_baseline_cap(new_cap))),
            Factory::FlipInput(f) => Factory::FlipInput(Box::new(f.with_baseline_cap(new_cap))),
            Factory::Scale { inner, alpha } => Factory::Scale {
                inner: Box::new(inner.with_baseline_cap(new_cap)),
                alpha: alpha.clone(),
            },
            Factory::Product(a, b) => Factory::Product(
                Box::new(a.with_baseline_cap(new_cap)),
                Box::new(b.with_baseline_cap(new_cap)),
            ),
        }
    }

    /// Runs the randomized sampler.
    pub fn sample<C: CoinSource, U: UniformSource>(
        &self,
        coins: &mut C,
        uniforms: &mut U,
    ) -> Result<Draw> {
        let mut engine = Engine::new(coins, Decider::Uniform(uniforms));
        let y = engine.run(self)?;
        Ok(engine.finish(y))
    }

    /// Runs the non-randomized sampler; only input coins are consumed.
    pub fn sample_nonrandomized<C: CoinSource>(
        &self,
        coins: &mut C,
        dyadic_shortcut: bool,
    ) -> Result<Draw> {
        let mut engine = Engine::<C, NoUniforms>::new(coins, Decider::Fair { dyadic_shortcut });
        let y = engine.run(self)?;
        Ok(engine.finish(y))
    }

    pub fn sample_mode<C: CoinSource, U: UniformSource>(
        &self,
        mode: Mode,
        coins: &mut C,
        uniforms: &mut U,
    ) -> Result<Draw> {
        match mode {
            Mode::Randomized => self.sample(coins, uniforms),
            Mode::NonRandomized { dyadic_shortcut } => {
                self.sample_nonrandomized(coins, dyadic_shortcut)
            }
        }
    }
}

impl fmt::Display for Factory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factory::Series(o) => write!(f, "{}", o.stops()),
            Factory::Baseline { oracle, .. } => write!(f, "baseline({})", oracle.stops()),
            Factory::Complement(inner) => write!(f, "complement({inner})"),
            Factory::FlipInput(inner) => write!(f, "flip_input({inner})"),
            Factory::Scale { inner, alpha } => write!(f, "scale({inner},alpha={})", alpha.value),
            Factory::Product(a, b) => write!(f, "prod({a},{b})"),
        }
    }
}

impl fmt::Debug for Factory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Factory({self})")
    }
}

/// Algorithm with early stopping: on iteration `i` read `X_i`; stop with
/// `Y = X_i` as soon as `X_i = 1` or `V_i = 1`, where `V_i ~ Bernoulli(d_i)`
/// comes from a uniform. The uniform is skipped when `X_i = 1` or `d_i` is 0 or 1.
pub fn sample_algorithm1<C: CoinSource, U: UniformSource>(
    d: &StoppingSequence,
    coins: &mut C,
    uniforms: &mut U,
) -> Result<FactoryOutcome> {
    run_single(d, coins, uniforms, false, None)
}

/// [`sample_algorithm1`] recording the `(X_i, V_i)` events.
pub fn sample_algorithm1_traced<C: CoinSource, U: UniformSource>(
    d: &StoppingSequence,
    coins: &mut C,
    uniforms: &mut U,
) -> Result<FactoryOutcome> {
    run_single(d, coins, uniforms, true, None)
}

/// Two-phase baseline: draw `L` with `Pr[L = k] = c_k` (sequentially, using
/// `d_k` as the conditional stop probability), then read exactly `L` coins.
/// Fails with [`Error::Truncated`] when `L` would exceed `cap`.
pub fn sample_wastlund_baseline<C: CoinSource, U: UniformSource>(
    d: &StoppingSequence,
    coins: &mut C,
    uniforms: &mut U,
    cap: u64,
) -> Result<FactoryOutcome> {
    run_single(d, coins, uniforms, false, Some(cap))
}

fn run_single<C: CoinSource, U: UniformSource>(
    d: &StoppingSequence,
    coins: &mut C,
    uniforms: &mut U,
    traced: bool,
    baseline_cap: Option<u64>,
) -> Result<FactoryOutcome> {
    let oracle = DigitOracle::new(d.clone());
    let mut engine = Engine::new(coins, Decider::Uniform(uniforms));
    if traced {
        engine.trace = Some(Vec::new());
    }
    let y = match baseline_cap {
        Some(cap) => engine.baseline(&oracle, cap)?,
        None => engine.series(&oracle)?,
    };
    let trace = engine.trace.take();
    let draw = engine.finish(y);
    Ok(FactoryOutcome {
        y,
        n: draw.inputs,
        uniforms: draw.uniforms,
        trace,
    })
}

/// Something a stop decision compares against: `d_k` or a scale weight.
pub(crate) enum Target<'a> {
    Stop { oracle: &'a DigitOracle, k: usize },
    Exact { value: &'a BigRational, head: u64, trail: Option<u64> },
}

impl Target<'_> {
    /// `(head block, position where the digits become constant)`.
    fn head(&self) -> Result<(u64, Option<u64>)> {
        match self {
            Target::Stop { oracle, k } => {
                let h = oracle.head(*k)?;
                Ok((h.block, h.trail.map(|t| t.start)))
            }
            Target::Exact { head, trail, .. } => Ok((*head, *trail)),
        }
    }

    fn block(&self, b: u32) -> Result<u64> {
        match self {
            Target::Stop { oracle, k } => oracle.block(*k, b),
            Target::Exact { value, head, .. } => Ok(if b == 0 {
                *head
            } else {
                Value::Exact((*value).clone())
                    .digit_block(b, DyadicConvention::TrailingZeros)
                    .expect("exact")
            }),
        }
    }

    fn digit(&self, j: u64, head: u64) -> Result<bool> {
        let (b, pos) = ((j - 1) / 64, (j - 1) % 64);
        let word = if b == 0 { head } else { self.block(b as u32)? };
        Ok((word >> (63 - pos)) & 1 == 1)
    }
}

pub(crate) enum Decider<'a, U> {
    Uniform(&'a mut U),
    Fair { dyadic_shortcut: bool },
}

pub(crate) struct Engine<'a, C, U> {
    coins: &'a mut C,
    decider: Decider<'a, U>,
    flipped: bool,
    tally: Draw,
    pub(crate) trace: Option<Vec<Event>>,
}

impl<'a, C: CoinSource, U: UniformSource> Engine<'a, C, U> {
    pub(crate) fn new(coins: &'a mut C, decider: Decider<'a, U>) -> Self {
        Engine {
            coins,
            decider,
            flipped: false,
            tally: Draw::default(),
            trace: None,
        }
    }

    pub(crate) fn finish(&self, y: bool) -> Draw {
        Draw { y, ..self.tally }
    }

    #[inline]
    fn coin(&mut self) -> bool {
        self.tally.inputs += 1;
        self.coins.next_bit() ^ self.flipped
    }

    /// Fair bit from the first unequal pair of coins.
    pub(crate) fn fair_bit(&mut self) -> bool {
        self.tally.fair_bits += 1;
        loop {
            self.tally.pairs += 1;
            let a = self.coin();
            let b = self.coin();
            if a != b {
                return a;
            }
        }
    }

    /// Bernoulli draw with success probability given by `target`.
    fn decide(&mut self, target: &Target<'_>) -> Result<bool> {
        let (head, trail) = target.head()?;
        match &mut self.decider {
            Decider::Uniform(uniforms) => {
                if trail == Some(1) {
                    return Ok(head != 0);
                }
                self.tally.uniforms += 1;
                let mut b = 0;
                loop {
                    let w = uniforms.next_word();
                    let t = if b == 0 { head } else { target.block(b)? };
                    if w != t {
                        return Ok(w < t);
                    }
                    b += 1;
                }
            }
            Decider::Fair { dyadic_shortcut } => {
                let shortcut = *dyadic_shortcut;
                let mut j = 1u64;
                loop {
                    // Past the last non-constant digit the outcome no longer depends on j.
                    if let Some(start) = trail.filter(|&s| shortcut && j >= s) {
                        return target.digit(start, head);
                    }
                    if self.fair_bit() {
                        return target.digit(j, head);
                    }
                    j += 1;
                }
            }
        }
    }

    pub(crate) fn run(&mut self, factory: &Factory) -> Result<bool> {
        match factory {
            Factory::Series(oracle) => self.series(oracle),
            Factory::Baseline { oracle, cap } => self.baseline(oracle, *cap),
            Factory::Complement(inner) => Ok(!self.run(inner)?),
            Factory::FlipInput(inner) => {
                self.flipped = !self.flipped;
                let y = self.run(inner);
                self.flipped = !self.flipped;
                y
            }
            Factory::Scale { inner, alpha } => {
                if alpha.value.is_one() {
                    return self.run(inner);
                }
                if !self.decide(&alpha.target())? {
                    return Ok(false);
                }
                self.run(inner)
            }
            Factory::Product(a, b) => {
                if !self.run(a)? {
                    return Ok(false);
                }
                self.run(b)
            }
        }
    }

    pub(crate) fn series(&mut self, oracle: &DigitOracle) -> Result<bool> {
        let always_decide = matches!(self.decider, Decider::Fair { .. });
        let mut k = 1;
        loop {
            let x = self.coin();
            self.tally.outer += 1;
            let pairs_before = self.tally.pairs;
            let v = if x && !always_decide {
                None
            } else {
                Some(self.decide(&Target::Stop { oracle, k })?)
            };
            if let Some(trace) = &mut self.trace {
                trace.push(Event {
                    x,
                    v,
                    pairs: self.tally.pairs - pairs_before,
                });
            }
            if x || v == Some(true) {
                return Ok(x);
            }
            k += 1;
        }
    }

    pub(crate) fn baseline(&mut self, oracle: &DigitOracle, cap: u64) -> Result<bool> {
        let mut l = 1u64;
        while !self.decide(&Target::Stop {
            oracle,
            k: l as usize,
        })? {
            l += 1;
            if l > cap {
                return Err(Error::Truncated { cap });
            }
        }
        self.tally.outer += l;
        let mut y = false;
        for _ in 0..l {
            y |= self.coin();
        }
        Ok(y)
    }
}
