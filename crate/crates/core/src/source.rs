//! Input coins and auxiliary uniforms.
//!
//! Simulated sources use ChaCha8 keyed by a 64-bit seed, with the 64-bit
//! stream id selecting an independent keystream. A uniform `U` on `(0, 1)` is
//! represented by its binary expansion, delivered 64 digits at a time, so a
//! comparison `U < d` reads exactly as many digits as it needs.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Source of i.i.d. Bernoulli(p) input bits with `p` unknown to the consumer.
pub trait CoinSource {
    fn next_bit(&mut self) -> bool;
}

/// Source of i.i.d. uniforms on `(0, 1)`, independent of the coins.
pub trait UniformSource {
    /// Next block of 64 binary digits. A comparison reads the digits of one
    /// uniform as consecutive words and starts the next uniform on a fresh word.
    fn next_word(&mut self) -> u64;

    /// A uniform rounded to `f64`, for callers that just need a number.
    fn next_uniform(&mut self) -> f64 {
        ((self.next_word() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }
}

impl<C: CoinSource + ?Sized> CoinSource for &mut C {
    fn next_bit(&mut self) -> bool {
        (**self).next_bit()
    }
}

impl<U: UniformSource + ?Sized> UniformSource for &mut U {
    fn next_word(&mut self) -> u64 {
        (**self).next_word()
    }
}

/// Uninhabited uniform source: a sampler typed with it cannot draw uniforms.
pub enum NoUniforms {}

impl UniformSource for NoUniforms {
    fn next_word(&mut self) -> u64 {
        match *self {}
    }
}

/// Bernoulli(p) coins: a 64-bit word `w` gives `1` iff `w < round(p * 2^64)`.
#[derive(Clone, Debug)]
pub struct SimCoins {
    rng: ChaCha8Rng,
    threshold: u64,
    always: bool,
}

impl SimCoins {
    pub fn new(p: f64, seed: u64, stream: u64) -> Self {
        assert!((0.0..=1.0).contains(&p), "coin probability {p} outside [0, 1]");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let scaled = p * 2f64.powi(64);
        SimCoins {
            rng,
            threshold: if scaled >= 2f64.powi(64) { u64::MAX } else { scaled.round() as u64 },
            always: p == 1.0,
        }
    }

    /// The probability actually simulated, `threshold / 2^64`.
    pub fn effective_p(&self) -> f64 {
        if self.always {
            1.0
        } else {
            self.threshold as f64 / 2f64.powi(64)
        }
    }
}

impl CoinSource for SimCoins {
    #[inline]
    fn next_bit(&mut self) -> bool {
        let w = self.rng.next_u64();
        self.always || w < self.threshold
    }
}

/// Uniform digit blocks from ChaCha8.
#[derive(Clone, Debug)]
pub struct SimUniforms {
    rng: ChaCha8Rng,
}

impl SimUniforms {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        SimUniforms { rng }
    }
}

impl UniformSource for SimUniforms {
    #[inline]
    fn next_word(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

/// Replays a fixed bit sequence; panics when exhausted.
#[derive(Clone, Debug)]
pub struct ScriptedCoins {
    bits: Vec<bool>,
    pos: usize,
}

impl ScriptedCoins {
    pub fn new(bits: impl IntoIterator<Item = bool>) -> Self {
        ScriptedCoins {
            bits: bits.into_iter().collect(),
            pos: 0,
        }
    }

    /// Builds from a string of `0`/`1` characters; other characters are skipped.
    pub fn from_str_bits(s: &str) -> Self {
        Self::new(s.chars().filter_map(|ch| match ch {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        }))
    }

    pub fn consumed(&self) -> usize {
        self.pos
    }
}

impl CoinSource for ScriptedCoins {
    fn next_bit(&mut self) -> bool {
        let b = *self
            .bits
            .get(self.pos)
            .unwrap_or_else(|| panic!("scripted coins exhausted after {} bits", self.pos));
        self.pos += 1;
        b
    }
}

/// Cycles through fixed words; useful to pin uniform comparisons in tests.
#[derive(Clone, Debug)]
pub struct ScriptedUniforms {
    words: Vec<u64>,
    pos: usize,
}

impl ScriptedUniforms {
    pub fn new(words: Vec<u64>) -> Self {
        assert!(!words.is_empty());
        ScriptedUniforms { words, pos: 0 }
    }

    /// Words holding the leading 64 digits of the given values, cycled.
    pub fn from_f64(values: &[f64]) -> Self {
        Self::new(values.iter().map(|u| (u * 2f64.powi(64)) as u64).collect())
    }

    pub fn consumed(&self) -> usize {
        self.pos
    }
}

impl UniformSource for ScriptedUniforms {
    fn next_word(&mut self) -> u64 {
        let w = self.words[self.pos % self.words.len()];
        self.pos += 1;
        w
    }
}

/// Coins from any closure, e.g. a hand-rolled generator.
pub struct FnCoins<F>(pub F);

impl<F: FnMut() -> bool> CoinSource for FnCoins<F> {
    fn next_bit(&mut self) -> bool {
        (self.0)()
    }
}
