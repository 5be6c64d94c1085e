//! Draws from the early-stopping sampler for `sqrt(p)` with a simulated coin,
//! prints a few traced runs and compares the long-run frequency with `sqrt(p)`.
//!
//! `cargo run --release --example sample_sqrt -- 0.3`

use bernoulli_factory::factory::sample_algorithm1_traced;
use bernoulli_factory::series::{stopping_from_coefficients, CoefficientSeries};
use bernoulli_factory::source::{SimCoins, SimUniforms};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p: f64 = std::env::args().nth(1).map_or(Ok(0.3), |s| s.parse())?;
    let d = stopping_from_coefficients(&CoefficientSeries::sqrt());
    let mut coins = SimCoins::new(p, 11, 0);
    let mut uniforms = SimUniforms::new(11, 1);

    for _ in 0..5 {
        let run = sample_algorithm1_traced(&d, &mut coins, &mut uniforms)?;
        let steps: Vec<String> = run
            .trace
            .unwrap_or_default()
            .iter()
            .map(|e| match e.v {
                None => format!("X={}", e.x as u8),
                Some(v) => format!("X={},V={}", e.x as u8, v as u8),
            })
            .collect();
        println!("Y={} after {} coins: {}", run.y as u8, run.n, steps.join(" "));
    }

    let m = 200_000;
    let (mut ones, mut coins_used) = (0u64, 0u64);
    for _ in 0..m {
        let run = bernoulli_factory::factory::sample_algorithm1(&d, &mut coins, &mut uniforms)?;
        ones += run.y as u64;
        coins_used += run.n;
    }
    println!(
        "p = {p}: mean Y {:.4} (sqrt p = {:.4}), mean coins {:.4} (sqrt(p)/p = {:.4})",
        ones as f64 / m as f64,
        p.sqrt(),
        coins_used as f64 / m as f64,
        p.sqrt() / p
    );
    Ok(())
}
