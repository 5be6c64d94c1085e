//! Early stopping against the two-phase sampler that draws the length first.
//! Both produce the same output law; the baseline reads more coins.

use bernoulli_factory::factory::{Factory, Mode, DEFAULT_BASELINE_CAP};
use bernoulli_factory::harness::replicate;
use bernoulli_factory::harness::stats::two_proportion_z;
use bernoulli_factory::series::CoefficientSeries;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sqrt = CoefficientSeries::sqrt();
    let early = Factory::series(&sqrt);
    let two_phase = Factory::baseline(&sqrt, DEFAULT_BASELINE_CAP);
    let m = 100_000;
    println!("{:>5} {:>12} {:>12} {:>8} {:>10}", "p", "early N", "baseline N", "z(Y)", "truncated");
    for (i, p) in [0.1, 0.25, 0.5].into_iter().enumerate() {
        let a = replicate(&early, Mode::Randomized, p, m, 2 * i as u64)?;
        let b = replicate(&two_phase, Mode::Randomized, p, m, 2 * i as u64 + 1)?;
        let kept = b.reps - b.truncated;
        println!(
            "{p:>5} {:>12.4} {:>12.4} {:>8.2} {:>10}",
            a.inputs as f64 / a.reps as f64,
            b.inputs as f64 / kept as f64,
            two_proportion_z(a.ones, a.reps, b.ones, kept),
            b.truncated
        );
    }
    Ok(())
}
