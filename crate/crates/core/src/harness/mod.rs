//! Monte Carlo experiments: replicated runs of a factory over a grid of coin
//! probabilities, summarised with confidence intervals and checked against
//! the exact laws.
//!
//! Replications are split into fixed chunks of [`CHUNK`] runs. Chunk `b` of
//! grid point `i` draws its coins from ChaCha8 stream `2b` and its uniforms
//! from stream `2b + 1`, keyed by a seed derived from the experiment seed and
//! `i`. Chunk tallies are integer counts merged in chunk order, so a report
//! depends only on the spec, never on the number of worker threads.

mod config;
mod laws;
mod report;
pub mod stats;
mod selftest;
mod sweep;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::EvalResult;
use crate::error::{Error, Result};
use crate::expr::parse_expression;
use crate::factory::{Draw, Factory, Mode, DEFAULT_BASELINE_CAP};
use crate::numeric::{DyadicConvention, DEFAULT_DIGIT_CEILING};
use crate::source::{SimCoins, SimUniforms};

pub use config::{load_spec, parse_p_grid, spec_from_toml};
pub use laws::{reference_law, series_of, test_joint_law, JointCell, JointLawCheck, Law};
pub use report::{write_report, Format, SCHEMA_VERSION};
pub use selftest::{selftest, Check};
pub use sweep::{sweep_optimality, SlopeFit, SweepReport, SweepRow};

/// Replications per chunk; the unit of parallel work and of stream assignment.
pub const CHUNK: u64 = 4096;

/// Default confidence level of reported intervals.
pub const DEFAULT_CONFIDENCE: f64 = 0.9999;

/// Default width of the pass/fail gates in standard errors.
pub const DEFAULT_GATE_SIGMA: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[serde(alias = "randomized")]
    Rand,
    #[serde(alias = "nonrandomized")]
    Nonrand,
    Baseline,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rand" | "randomized" => Ok(Algorithm::Rand),
            "nonrand" | "nonrandomized" => Ok(Algorithm::Nonrand),
            "baseline" => Ok(Algorithm::Baseline),
            other => Err(Error::InvalidExperiment(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// Statistics a run can record beyond the means.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Tail,
    Histogram,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub expression: String,
    pub p: Vec<f64>,
    pub reps: u64,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub dyadic_shortcut: bool,
    pub digit_ceiling: u32,
    pub baseline_cap: u64,
    pub confidence: f64,
    pub gate_sigma: f64,
    /// Largest `n` checked by the tail gate.
    pub tail_gate_max: u64,
    pub outputs: Vec<Statistic>,
    /// Worker threads; `None` uses the global pool.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            expression: "sqrt".into(),
            p: vec![0.5],
            reps: 100_000,
            seed: 0,
            algorithm: Algorithm::Rand,
            dyadic_shortcut: false,
            digit_ceiling: DEFAULT_DIGIT_CEILING,
            baseline_cap: DEFAULT_BASELINE_CAP,
            confidence: DEFAULT_CONFIDENCE,
            gate_sigma: DEFAULT_GATE_SIGMA,
            tail_gate_max: 30,
            outputs: vec![Statistic::Tail, Statistic::Histogram],
            threads: None,
        }
    }
}

impl ExperimentSpec {
    pub fn new(expression: impl Into<String>, p: Vec<f64>, reps: u64, seed: u64) -> Self {
        ExperimentSpec {
            expression: expression.into(),
            p,
            reps,
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p.is_empty() {
            return Err(Error::InvalidExperiment("empty p grid".into()));
        }
        if let Some(p) = self.p.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(Error::InvalidExperiment(format!("p = {p} outside (0, 1)")));
        }
        if self.reps == 0 {
            return Err(Error::InvalidExperiment("reps must be at least 1".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::InvalidExperiment(format!(
                "confidence {} outside (0, 1)",
                self.confidence
            )));
        }
        if self.gate_sigma.is_nan() || self.gate_sigma <= 0.0 {
            return Err(Error::InvalidExperiment("gate_sigma must be positive".into()));
        }
        if self.digit_ceiling < 64 {
            return Err(Error::InvalidExperiment("digit_ceiling must be at least 64".into()));
        }
        if self.baseline_cap == 0 {
            return Err(Error::InvalidExperiment("baseline_cap must be at least 1".into()));
        }
        Ok(())
    }

    pub fn mode(&self) -> Mode {
        match self.algorithm {
            Algorithm::Nonrand => Mode::NonRandomized {
                dyadic_shortcut: self.dyadic_shortcut,
            },
            _ => Mode::Randomized,
        }
    }

    /// The factory the spec describes, with the algorithm and digit settings applied.
    pub fn factory(&self) -> Result<Factory> {
        let mut f = parse_expression(&self.expression)?
            .build()?
            .with_baseline_cap(self.baseline_cap);
        if self.algorithm == Algorithm::Baseline {
            f = f.to_baseline(self.baseline_cap);
        }
        if self.digit_ceiling != DEFAULT_DIGIT_CEILING {
            f = f.with_digit_settings(DyadicConvention::TrailingZeros, self.digit_ceiling);
        }
        Ok(f)
    }
}

/// Counts over `n -> [runs with y = 0, runs with y = 1]`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Histogram {
    dense: Vec<[u64; 2]>,
    sparse: BTreeMap<u64, [u64; 2]>,
}

const DENSE_LIMIT: u64 = 4096;

impl Histogram {
    #[inline]
    pub fn add(&mut self, n: u64, y: bool) {
        if n < DENSE_LIMIT {
            let i = n as usize;
            if self.dense.len() <= i {
                self.dense.resize(i + 1, [0, 0]);
            }
            self.dense[i][y as usize] += 1;
        } else {
            self.sparse.entry(n).or_insert([0, 0])[y as usize] += 1;
        }
    }

    pub fn merge(&mut self, other: &Histogram) {
        if self.dense.len() < other.dense.len() {
            self.dense.resize(other.dense.len(), [0, 0]);
        }
        for (a, b) in self.dense.iter_mut().zip(&other.dense) {
            a[0] += b[0];
            a[1] += b[1];
        }
        for (n, c) in &other.sparse {
            let e = self.sparse.entry(*n).or_insert([0, 0]);
            e[0] += c[0];
            e[1] += c[1];
        }
    }

    /// Non-empty cells in increasing `n`.
    pub fn rows(&self) -> Vec<HistRow> {
        self.dense
            .iter()
            .enumerate()
            .map(|(n, c)| (n as u64, *c))
            .chain(self.sparse.iter().map(|(n, c)| (*n, *c)))
            .filter(|(_, c)| c[0] + c[1] > 0)
            .map(|(n, c)| HistRow { n, y0: c[0], y1: c[1] })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct HistRow {
    pub n: u64,
    pub y0: u64,
    pub y1: u64,
}

/// Integer sufficient statistics of a batch of runs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub reps: u64,
    pub ones: u64,
    pub truncated: u64,
    pub inputs: u128,
    pub inputs_sq: u128,
    pub outer: u128,
    pub uniforms: u128,
    pub pairs: u128,
    pub fair_bits: u128,
    pub inputs_hist: Histogram,
    pub outer_hist: Histogram,
}

impl Tally {
    #[inline]
    pub fn add(&mut self, d: &Draw) {
        self.reps += 1;
        self.ones += d.y as u64;
        self.inputs += d.inputs as u128;
        self.inputs_sq += (d.inputs as u128) * (d.inputs as u128);
        self.outer += d.outer as u128;
        self.uniforms += d.uniforms as u128;
        self.pairs += d.pairs as u128;
        self.fair_bits += d.fair_bits as u128;
        self.inputs_hist.add(d.inputs, d.y);
        self.outer_hist.add(d.outer, d.y);
    }

    pub fn merge(mut self, o: &Tally) -> Tally {
        self.reps += o.reps;
        self.ones += o.ones;
        self.truncated += o.truncated;
        self.inputs += o.inputs;
        self.inputs_sq += o.inputs_sq;
        self.outer += o.outer;
        self.uniforms += o.uniforms;
        self.pairs += o.pairs;
        self.fair_bits += o.fair_bits;
        self.inputs_hist.merge(&o.inputs_hist);
        self.outer_hist.merge(&o.outer_hist);
        self
    }
}

/// Seed for grid point `index`, decorrelated from neighbouring indices.
pub fn point_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `reps` replications of `factory` at coin probability `p`.
///
/// Baseline runs that exceed their cap are counted in `truncated` and left
/// out of every other statistic. Any other sampler error aborts the run.
pub fn replicate(factory: &Factory, mode: Mode, p: f64, reps: u64, seed: u64) -> Result<Tally> {
    let chunks = reps.div_ceil(CHUNK);
    let tallies: Vec<Result<Tally>> = (0..chunks)
        .into_par_iter()
        .map(|b| {
            let len = CHUNK.min(reps - b * CHUNK);
            let mut coins = SimCoins::new(p, seed, 2 * b);
            let mut uniforms = SimUniforms::new(seed, 2 * b + 1);
            let mut t = Tally::default();
            for _ in 0..len {
                match factory.sample_mode(mode, &mut coins, &mut uniforms) {
                    Ok(d) => t.add(&d),
                    Err(Error::Truncated { .. }) => t.truncated += 1,
                    Err(e) => return Err(e),
                }
            }
            Ok(t)
        })
        .collect();
    let mut total = Tally::default();
    for t in tallies {
        total = total.merge(&t?);
    }
    Ok(total)
}

/// A point estimate with a confidence interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub sd: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailPoint {
    pub n: u64,
    /// Empirical `Pr[N > n]`.
    pub prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Gate {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointRecord {
    pub p: f64,
    /// Completed replications (truncated baseline runs excluded).
    pub reps: u64,
    pub truncated: u64,
    pub ones: u64,
    pub mean_y: Estimate,
    /// Input coins per run.
    pub mean_n: MeanEstimate,
    pub mean_outer: f64,
    pub mean_uniforms: f64,
    pub mean_pairs: f64,
    pub reference_f: Option<EvalResult>,
    pub reference_n: Option<EvalResult>,
    pub gates: Vec<Gate>,
    /// `Pr[N > n]` at each observed `n`, with `N` the input count.
    pub tail: Option<Vec<TailPoint>>,
    pub histogram: Option<Vec<HistRow>>,
    /// Histogram of outer-loop iterations (equal to `histogram` for a plain
    /// randomized series run).
    pub outer_histogram: Option<Vec<HistRow>>,
}

impl PointRecord {
    pub fn passed(&self) -> bool {
        self.gates.iter().all(|g| g.pass)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub expression: String,
    pub algorithm: Algorithm,
    pub dyadic_shortcut: bool,
    pub seed: u64,
    pub reps: u64,
    pub confidence: f64,
    pub gate_sigma: f64,
    pub points: Vec<PointRecord>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.points.iter().all(PointRecord::passed)
    }
}

/// Options for summarising a tally.
#[derive(Clone, Copy, Debug)]
pub struct Summary {
    pub z: f64,
    pub sigma: f64,
    pub tail_gate_max: u64,
    pub tail: bool,
    pub histogram: bool,
}

/// Turns a tally into a record and applies the gates that have a reference.
pub fn summarize(t: &Tally, p: f64, law: Option<&Law>, tail_gate: bool, opts: Summary) -> PointRecord {
    let m = t.reps;
    let (y_lo, y_hi) = stats::wilson(t.ones, m, opts.z);
    let (n_mean, n_sd) = stats::mean_sd(t.inputs, t.inputs_sq, m);
    let (n_lo, n_hi) = stats::mean_interval(n_mean, n_sd, m, opts.z);
    let mf = m as f64;
    let mean_y = t.ones as f64 / mf;
    let rows = t.inputs_hist.rows();
    let mut gates = Vec::new();
    if let Some(law) = law {
        let f = law.f.value;
        let se = (f * (1.0 - f)).max(0.0).sqrt() / mf.sqrt();
        let diff = (mean_y - f).abs();
        let allowed = opts.sigma * se + law.f.error_bound;
        gates.push(Gate {
            name: "mean_y".into(),
            pass: diff <= allowed,
            detail: format!("|{mean_y:.6} - {f:.6}| = {diff:.3e}, allowed {allowed:.3e}"),
        });
        if let Some(e) = law.expected_n {
            let diff = (n_mean - e.value).abs();
            let allowed = opts.sigma * n_sd / mf.sqrt() + e.error_bound;
            gates.push(Gate {
                name: "mean_n".into(),
                pass: diff <= allowed.max(1e-12),
                detail: format!("|{n_mean:.6} - {:.6}| = {diff:.3e}, allowed {allowed:.3e}", e.value),
            });
        }
    }
    let tail = tail_curve(&rows, m);
    if tail_gate {
        let q = 1.0 - p;
        let mut worst: Option<(u64, f64, f64)> = None;
        for n in 1..=opts.tail_gate_max {
            let b = tail_at(&tail, n);
            let allowed = q.powi(n as i32) + opts.sigma * (b * (1.0 - b) / mf).sqrt();
            if b > allowed && worst.is_none() {
                worst = Some((n, b, allowed));
            }
        }
        gates.push(Gate {
            name: "tail".into(),
            pass: worst.is_none(),
            detail: match worst {
                None => format!("Pr[N > n] <= (1-p)^n + {}·se for n <= {}", opts.sigma, opts.tail_gate_max),
                Some((n, b, a)) => format!("Pr[N > {n}] = {b:.6} exceeds {a:.6}"),
            },
        });
    }
    PointRecord {
        p,
        reps: m,
        truncated: t.truncated,
        ones: t.ones,
        mean_y: Estimate {
            value: mean_y,
            lo: y_lo,
            hi: y_hi,
        },
        mean_n: MeanEstimate {
            value: n_mean,
            lo: n_lo,
            hi: n_hi,
            sd: n_sd,
        },
        mean_outer: t.outer as f64 / mf,
        mean_uniforms: t.uniforms as f64 / mf,
        mean_pairs: t.pairs as f64 / mf,
        reference_f: law.map(|l| l.f),
        reference_n: law.and_then(|l| l.expected_n),
        gates,
        tail: opts.tail.then_some(tail),
        histogram: opts.histogram.then(|| rows.clone()),
        outer_histogram: opts.histogram.then(|| t.outer_hist.rows()),
    }
}

fn tail_curve(rows: &[HistRow], m: u64) -> Vec<TailPoint> {
    let mut above = m;
    let mut out = Vec::with_capacity(rows.len());
    for r in rows {
        above -= r.y0 + r.y1;
        out.push(TailPoint {
            n: r.n,
            prob: above as f64 / m as f64,
        });
    }
    out
}

/// Empirical `Pr[N > n]` from the step function stored at observed points.
pub fn tail_at(tail: &[TailPoint], n: u64) -> f64 {
    match tail.partition_point(|t| t.n <= n) {
        0 => 1.0,
        i => tail[i - 1].prob,
    }
}

fn with_threads<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidExperiment(format!("thread pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

/// Runs an experiment. Reports depend only on the spec.
pub fn run(spec: &ExperimentSpec) -> Result<RunReport> {
    spec.validate()?;
    let expr = parse_expression(&spec.expression)?;
    let factory = spec.factory()?;
    let mode = spec.mode();
    let opts = Summary {
        z: stats::z_for_confidence(spec.confidence),
        sigma: spec.gate_sigma,
        tail_gate_max: spec.tail_gate_max,
        tail: spec.outputs.contains(&Statistic::Tail),
        histogram: spec.outputs.contains(&Statistic::Histogram),
    };
    let tail_gate = matches!(factory, Factory::Series(_)) && mode == Mode::Randomized;
    let points = with_threads(spec.threads, || {
        spec.p
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let tally = replicate(&factory, mode, p, spec.reps, point_seed(spec.seed, i))?;
                let law = reference_law(&factory, p, mode)?;
                Ok(summarize(&tally, p, Some(&law), tail_gate, opts))
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        expression: expr.to_string(),
        algorithm: spec.algorithm,
        dyadic_shortcut: spec.dyadic_shortcut,
        seed: spec.seed,
        reps: spec.reps,
        confidence: spec.confidence,
        gate_sigma: spec.gate_sigma,
        points,
    })
}
