//! The sampler without a uniform source: stop decisions read binary digits of
//! `d_k` with fair bits extracted from pairs of input coins.

use bernoulli_factory::analysis::{expected_inputs_alg1, expected_inputs_alg2};
use bernoulli_factory::nonrand::{sample_algorithm2_traced, von_neumann_bit, DigitOracle};
use bernoulli_factory::series::{stopping_from_coefficients, CoefficientSeries};
use bernoulli_factory::source::SimCoins;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = 0.5;
    let sqrt = CoefficientSeries::sqrt();
    let oracle = DigitOracle::new(stopping_from_coefficients(&sqrt));
    let mut coins = SimCoins::new(p, 99, 0);

    let run = sample_algorithm2_traced(&oracle, &mut coins, false)?;
    println!(
        "one run: Y={} total coins {} in {} iterations, pairs per iteration {:?}",
        run.y as u8,
        run.n_total,
        run.n_outer,
        run.pair_counts.unwrap_or_default()
    );

    let (mut bits, mut pairs) = (0u64, 0u64);
    let m = 100_000;
    for _ in 0..m {
        let (b, n) = von_neumann_bit(&mut coins);
        bits += b as u64;
        pairs += n;
    }
    println!("fair bits: mean {:.4}, pairs per bit {:.4}", bits as f64 / m as f64, pairs as f64 / m as f64);

    for shortcut in [false, true] {
        let mut total = 0u64;
        for _ in 0..m {
            total += bernoulli_factory::nonrand::sample_algorithm2(&oracle, &mut coins, shortcut)?.n_total;
        }
        println!("dyadic shortcut {shortcut:<5}: mean coins {:.3}", total as f64 / m as f64);
    }
    println!(
        "exact: {:.3} without uniforms, {:.3} with them",
        expected_inputs_alg2(&sqrt, p)?.value,
        expected_inputs_alg1(&sqrt, p)?.value
    );
    Ok(())
}
