//! Builds new series from old ones and checks the sampled frequencies against
//! the composed functions: `g(f(p))`, `1 - (1-f)(1-g)` and `a f + (1-a) g`.

use bernoulli_factory::analysis::eval_f;
use bernoulli_factory::factory::{Factory, Mode};
use bernoulli_factory::harness::replicate;
use bernoulli_factory::series::{compose, convex_combination, product_complement, CoefficientSeries};
use num_rational::BigRational;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sqrt = CoefficientSeries::sqrt();
    let entropy = CoefficientSeries::entropy();
    let p: f64 = 0.2;
    let cases = [
        ("compose(sqrt,sqrt)", compose(&sqrt, &sqrt, 32)?, p.powf(0.25)),
        (
            "pc(sqrt,entropy)",
            product_complement(&sqrt, &entropy),
            1.0 - (1.0 - p.sqrt()) * (1.0 - eval_f(&entropy, p, 1e-14)?.value),
        ),
        (
            "convex(sqrt,entropy,0.3)",
            convex_combination(&sqrt, &entropy, BigRational::new(3.into(), 10.into()))?,
            0.3 * p.sqrt() + 0.7 * eval_f(&entropy, p, 1e-14)?.value,
        ),
    ];
    for (name, series, closed) in cases {
        let t = replicate(&Factory::series(&series), Mode::Randomized, p, 200_000, 5)?;
        println!(
            "{name:<26} f({p}) = {closed:.6}  series {:.6}  sampled {:.4}  mean N {:.3}",
            eval_f(&series, p, 1e-12)?.value,
            t.ones as f64 / t.reps as f64,
            t.inputs as f64 / t.reps as f64,
        );
    }
    Ok(())
}
