//! Exact values with error bounds: `f`, `f'`, the expected cost of both
//! samplers and the information lower bound for any unbiased sampler.

use bernoulli_factory::analysis::{
    cramer_rao_bound, eval_f, eval_f_prime, expected_inputs_alg1, expected_inputs_alg2,
};
use bernoulli_factory::expr::parse_series;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = std::env::args().nth(1).unwrap_or_else(|| "log2_sqrt".into());
    let c = parse_series(&text)?.build()?;
    println!("{text}");
    println!("{:>6} {:>14} {:>9} {:>12} {:>10} {:>10} {:>10}", "p", "f", "±", "f'", "E[N]", "E[N] vN", "bound");
    for p in [0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99] {
        let f = eval_f(&c, p, 1e-12)?;
        println!(
            "{p:>6} {:>14.10} {:>9.1e} {:>12.6} {:>10.4} {:>10.4} {:>10.4}",
            f.value,
            f.error_bound,
            eval_f_prime(&c, p, 1e-10)?.value,
            expected_inputs_alg1(&c, p)?.value,
            expected_inputs_alg2(&c, p)?.value,
            cramer_rao_bound(&c, p)?.value
        );
    }
    Ok(())
}
