//! The `bfactory` command line.
//!
//! Exit status is 0 when every statistical gate passes, 1 when a gate fails
//! and 2 for usage, parse or runtime errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{
    cramer_rao_from_values, eval_f, eval_f_prime, expected_inputs_alg1, expected_inputs_alg2,
    DEFAULT_TOL,
};
use crate::error::{Error, Result};
use crate::expr::{parse_expression, parse_series};
use crate::harness::{
    self, parse_p_grid, spec_from_toml, selftest, sweep_optimality, test_joint_law, write_report,
    Algorithm, ExperimentSpec, Format, RunReport, DEFAULT_GATE_SIGMA,
};

/// Environment variable consulted for the seed when neither `--seed` nor a
/// config file supplies one.
pub const SEED_ENV: &str = "BFACTORY_SEED";

#[derive(Parser, Debug)]
#[command(name = "bfactory", version, about = "Exact Bernoulli factory sampler and experiment runner")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tabulate f, f', expected costs and the information bound over a p grid.
    Analyze(AnalyzeArgs),
    /// Run replications and write the report.
    Simulate(RunArgs),
    /// Run replications and exit 1 if any gate fails.
    Verify(RunArgs),
    /// Compare mean cost with f(p)/p over a grid of small p.
    Sweep(SweepArgs),
    /// Quick check of every module at reduced replication count.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug)]
pub struct Output {
    /// Write to PATH instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    pub format: String,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Series expression.
    pub expression: String,
    /// Comma list or geom:start,stop,points.
    #[arg(long, default_value = "0.05,0.1,0.25,0.5,0.75,0.9,0.95")]
    pub p: String,
    /// Absolute tolerance for f and f'.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Factory expression; optional when --config supplies one.
    pub expression: Option<String>,
    /// TOML experiment file; flags given on the command line override it.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Comma list or geom:start,stop,points [default: 0.5].
    #[arg(long)]
    pub p: Option<String>,
    /// Replications per p [default: 100000].
    #[arg(long)]
    pub reps: Option<u64>,
    /// Base seed; overrides the config file and BFACTORY_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sampler [default: rand].
    #[arg(long, value_parser = ["rand", "nonrand", "baseline"])]
    pub algo: Option<String>,
    /// Same as --algo nonrand.
    #[arg(long, conflicts_with = "algo")]
    pub nonrandomized: bool,
    /// Non-randomized sampler: compare a terminating dyadic d exactly.
    #[arg(long)]
    pub dyadic_shortcut: bool,
    /// Binary digits read before giving up on an inexact d [default: 4096].
    #[arg(long, value_name = "BITS")]
    pub digit_ceiling: Option<u32>,
    /// Confidence of the reported intervals [default: 0.9999].
    #[arg(long)]
    pub confidence: Option<f64>,
    /// Longest baseline run before it is counted as truncated [default: 1000000].
    #[arg(long)]
    pub baseline_cap: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Series expressions.
    #[arg(required = true)]
    pub expressions: Vec<String>,
    #[arg(long, default_value = "geom:0.25,0.0009765625,9")]
    pub p: String,
    #[arg(long, default_value_t = 100_000)]
    pub reps: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_GATE_SIGMA)]
    pub sigma: f64,
    #[arg(long)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 10_000)]
    pub reps: u64,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Serialize)]
struct AnalyzeRow {
    p: f64,
    f: f64,
    f_error: f64,
    f_prime: f64,
    f_prime_error: f64,
    expected_n_rand: f64,
    expected_n_nonrand: f64,
    information_bound: f64,
}

#[derive(Serialize)]
struct SweepCsvRow<'a> {
    series: &'a str,
    p: f64,
    reps: u64,
    mean_n: f64,
    se_n: f64,
    expected_n: f64,
    ratio: f64,
    ratio_se: f64,
    pass: bool,
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidExperiment(format!("{SEED_ENV}='{s}' is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn format_of(o: &Output) -> Format {
    if o.format == "json" {
        Format::Json
    } else {
        Format::Csv
    }
}

fn with_sink(o: &Output, stdout: &mut dyn Write, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match &o.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            body(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => body(stdout),
    }
}

fn write_csv<T: Serialize>(rows: &[T], out: &mut dyn Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize + ?Sized>(value: &T, out: &mut dyn Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn pool(threads: Option<usize>) -> Result<Option<rayon::ThreadPool>> {
    threads
        .map(|n| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidExperiment(format!("thread pool: {e}")))
        })
        .transpose()
}

fn analyze(a: &AnalyzeArgs, stdout: &mut dyn Write) -> Result<i32> {
    let c = parse_series(&a.expression)?.build()?;
    let grid = parse_p_grid(&a.p)?;
    let mut rows = Vec::with_capacity(grid.len());
    for p in grid {
        let f = eval_f(&c, p, a.tol)?;
        let fp = eval_f_prime(&c, p, a.tol)?;
        rows.push(AnalyzeRow {
            p,
            f: f.value,
            f_error: f.error_bound,
            f_prime: fp.value,
            f_prime_error: fp.error_bound,
            expected_n_rand: expected_inputs_alg1(&c, p)?.value,
            expected_n_nonrand: expected_inputs_alg2(&c, p)?.value,
            information_bound: cramer_rao_from_values(f, fp, p)?.value,
        });
    }
    with_sink(&a.output, stdout, |w| match format_of(&a.output) {
        Format::Csv => write_csv(&rows, w),
        Format::Json => write_json(&rows, w),
    })?;
    Ok(0)
}

/// Builds the experiment: config file first, then flags, then the seed
/// fallback `--seed` > config `seed` > `BFACTORY_SEED` > 0.
pub fn experiment_spec(a: &RunArgs) -> Result<ExperimentSpec> {
    let (mut spec, config_seed) = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let has_seed = text
                .parse::<toml::Table>()
                .is_ok_and(|t| t.contains_key("seed"));
            (spec_from_toml(&text)?, has_seed)
        }
        None => (ExperimentSpec::default(), false),
    };
    match (&a.expression, &a.config) {
        (Some(e), _) => spec.expression = e.clone(),
        (None, None) => {
            return Err(Error::InvalidExperiment(
                "an expression or --config is required".into(),
            ))
        }
        (None, Some(_)) => {}
    }
    if let Some(p) = &a.p {
        spec.p = parse_p_grid(p)?;
    }
    if let Some(r) = a.reps {
        spec.reps = r;
    }
    spec.seed = match a.seed {
        Some(s) => s,
        None if config_seed => spec.seed,
        None => env_seed()?.unwrap_or(0),
    };
    if let Some(algo) = &a.algo {
        spec.algorithm = algo.parse::<Algorithm>()?;
    }
    if a.nonrandomized {
        spec.algorithm = Algorithm::Nonrand;
    }
    spec.dyadic_shortcut |= a.dyadic_shortcut;
    if let Some(b) = a.digit_ceiling {
        spec.digit_ceiling = b;
    }
    if let Some(c) = a.confidence {
        spec.confidence = c;
    }
    if let Some(c) = a.baseline_cap {
        spec.baseline_cap = c;
    }
    if a.threads.is_some() {
        spec.threads = a.threads;
    }
    spec.validate()?;
    parse_expression(&spec.expression)?;
    Ok(spec)
}

fn gate_lines(report: &RunReport, joint: Option<&harness::JointLawCheck>, err: &mut dyn Write) -> io::Result<()> {
    for pt in &report.points {
        for g in &pt.gates {
            let verdict = if g.pass { "PASS" } else { "FAIL" };
            writeln!(err, "{verdict} p={} {}: {}", pt.p, g.name, g.detail)?;
        }
    }
    if let Some(j) = joint {
        let verdict = if j.pass { "PASS" } else { "FAIL" };
        let worst = j.cells.iter().map(|c| c.z.abs()).fold(0.0, f64::max);
        writeln!(
            err,
            "{verdict} p={} joint_law: {} cells, max |z| = {worst:.2}",
            report.points[0].p,
            j.cells.len()
        )?;
    }
    Ok(())
}

fn simulate(a: &RunArgs, gated: bool, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let spec = experiment_spec(a)?;
    let report = harness::run(&spec)?;
    with_sink(&a.output, stdout, |w| write_report(&report, format_of(&a.output), w))?;
    if !gated {
        return Ok(0);
    }
    // The joint law is checked for a plain randomized series at the first grid point.
    let expr = parse_expression(&spec.expression)?;
    let joint = match (expr.as_series(), spec.algorithm) {
        (Some(s), Algorithm::Rand) if !spec.dyadic_shortcut => {
            match test_joint_law(&report.points[0], &s.build()?, report.points[0].p, spec.gate_sigma) {
                Ok(j) => Some(j),
                Err(Error::InsufficientReplications(_)) => None,
                Err(e) => return Err(e),
            }
        }
        _ => None,
    };
    gate_lines(&report, joint.as_ref(), stderr)?;
    let pass = report.passed() && joint.as_ref().is_none_or(|j| j.pass);
    Ok(if pass { 0 } else { 1 })
}

fn sweep(a: &SweepArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let entries = a
        .expressions
        .iter()
        .map(|e| parse_series(e))
        .collect::<Result<Vec<_>>>()?;
    let grid = parse_p_grid(&a.p)?;
    if let Some(p) = grid.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        return Err(Error::InvalidExperiment(format!("p = {p} outside (0, 1)")));
    }
    let seed = match a.seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    };
    let job = || sweep_optimality(&entries, &grid, a.reps, seed, a.sigma);
    let report = match pool(a.threads)? {
        Some(pool) => pool.install(job)?,
        None => job()?,
    };
    with_sink(&a.output, stdout, |w| match format_of(&a.output) {
        Format::Json => write_json(&report, w),
        Format::Csv => {
            let rows: Vec<SweepCsvRow> = report
                .rows
                .iter()
                .map(|r| SweepCsvRow {
                    series: &r.series,
                    p: r.p,
                    reps: r.reps,
                    mean_n: r.mean_n,
                    se_n: r.se_n,
                    expected_n: r.expected_n.value,
                    ratio: r.ratio,
                    ratio_se: r.ratio_se,
                    pass: r.pass,
                })
                .collect();
            write_csv(&rows, w)
        }
    })?;
    for fit in &report.fits {
        let predicted = fit.predicted.map_or("n/a".to_string(), |s| format!("{s:.4}"));
        writeln!(
            stderr,
            "slope {}: empirical {:.4} ± {:.4}, exact {:.4}, predicted {predicted}",
            fit.series, fit.empirical.slope, fit.empirical.slope_se, fit.exact.slope
        )?;
    }
    Ok(if report.passed() { 0 } else { 1 })
}

fn run_selftest(a: &SelftestArgs, stdout: &mut dyn Write) -> Result<i32> {
    if a.reps == 0 {
        return Err(Error::InvalidExperiment("reps must be at least 1".into()));
    }
    let seed = match a.seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    };
    let checks = selftest(a.reps, seed, DEFAULT_GATE_SIGMA)?;
    for c in &checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        writeln!(stdout, "{verdict} {}: {}", c.name, c.detail)?;
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    writeln!(stdout, "{} checks, {failed} failed", checks.len())?;
    Ok(if failed == 0 { 0 } else { 1 })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Analyze(a) => analyze(a, stdout),
        Command::Simulate(a) => simulate(a, false, stdout, stderr),
        Command::Verify(a) => simulate(a, true, stdout, stderr),
        Command::Sweep(a) => sweep(a, stdout, stderr),
        Command::Selftest(a) => run_selftest(a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}

pub fn main() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    let code = run_cli(std::env::args_os(), &mut out, &mut err);
    let _ = out.flush();
    code
}
