//! Wraps the `sqrt` sampler in output complement, input flip, scaling and
//! product, and prints the frequency each wrapped sampler produces.

use bernoulli_factory::expr::parse_expression;
use bernoulli_factory::factory::Mode;
use bernoulli_factory::harness::{reference_law, replicate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = 0.36;
    for text in [
        "sqrt",
        "complement(sqrt)",
        "flip_input(sqrt)",
        "scale(sqrt,alpha=1/2)",
        "prod(sqrt,sqrt)",
        "prod(complement(sqrt),flip_input(entropy))",
    ] {
        let factory = parse_expression(text)?.build()?;
        let law = reference_law(&factory, p, Mode::Randomized)?;
        let t = replicate(&factory, Mode::Randomized, p, 100_000, 3)?;
        println!(
            "{:<44} target {:.5}  sampled {:.5}  mean N {:.3} (exact {:.3})",
            factory.to_string(),
            law.f.value,
            t.ones as f64 / t.reps as f64,
            t.inputs as f64 / t.reps as f64,
            law.expected_n.map_or(f64::NAN, |e| e.value),
        );
    }
    Ok(())
}
