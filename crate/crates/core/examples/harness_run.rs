//! Replicates a factory over a grid of coin probabilities and prints the
//! estimates next to the exact references.
//!
//! `cargo run --release --example harness_run -- "log2_sqrt" 1000000`

use bernoulli_factory::harness::{run, ExperimentSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let expression = args.next().unwrap_or_else(|| "sqrt".into());
    let reps = args.next().map_or(Ok(200_000), |s| s.parse())?;
    let mut spec = ExperimentSpec::new(expression, vec![0.1, 0.25, 0.5, 0.9], reps, 2024);
    spec.outputs.clear();

    let report = run(&spec)?;
    println!("{}  ({} runs per point)", report.expression, report.reps);
    println!("{:>6} {:>10} {:>10} {:>10} {:>10}  gates", "p", "mean Y", "f(p)", "mean N", "f(p)/p");
    for pt in &report.points {
        let f = pt.reference_f.map_or(f64::NAN, |e| e.value);
        let e = pt.reference_n.map_or(f64::NAN, |e| e.value);
        let verdict = if pt.passed() { "pass" } else { "FAIL" };
        println!(
            "{:>6} {:>10.5} {:>10.5} {:>10.4} {:>10.4}  {verdict}",
            pt.p, pt.mean_y.value, f, pt.mean_n.value, e
        );
    }
    Ok(())
}
