//! Prints the first coefficients and stopping probabilities of every catalog
//! series together with `f(1/2)`.

use bernoulli_factory::analysis::eval_f;
use bernoulli_factory::expr::catalog_expressions;
use bernoulli_factory::series::stopping_from_coefficients;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for e in catalog_expressions() {
        let c = e.build()?;
        let d = stopping_from_coefficients(&c);
        println!("{e}   f(1/2) = {:.12}", eval_f(&c, 0.5, 1e-12)?.value);
        for k in 1..=6 {
            let ck = c.coefficient_at(k)?;
            let dk = match d.d_at(k) {
                Ok(v) => format!("{:.8}", v.to_f64()),
                Err(_) => "-".into(),
            };
            println!("  k={k}  c_k = {:<12.8} d_k = {dk}", ck.to_f64());
        }
    }
    Ok(())
}
