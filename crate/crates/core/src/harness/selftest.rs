//! A fast end-to-end check of every module at a reduced replication count.

use num_rational::BigRational;
use num_traits::One;

use super::{point_seed, reference_law, replicate, summarize, test_joint_law, Summary};
use crate::analysis::{cramer_rao_bound, eval_f, eval_f_prime, expected_inputs_alg1};
use crate::error::Result;
use crate::expr::catalog_expressions;
use crate::factory::{Factory, Mode};
use crate::nonrand::von_neumann_bit;
use crate::series::{
    coefficients_from_stopping, compose, stopping_from_coefficients, CoefficientSeries, Exactness,
};
use crate::source::SimCoins;

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        pass,
        detail: detail.into(),
    }
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn same_prefix(a: &CoefficientSeries, b: &CoefficientSeries, k: usize) -> Result<Option<usize>> {
    for i in 1..=k {
        if a.coefficient_at(i)? != b.coefficient_at(i)? {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// Runs the self-test with `reps` replications per Monte Carlo cell.
pub fn selftest(reps: u64, seed: u64, sigma: f64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let entries = catalog_expressions();

    for e in &entries {
        let c = e.build()?;
        let mut ok = true;
        for k in 1..=64 {
            ok &= c.coefficient_at(k)?.possibly_nonnegative();
        }
        ok &= c.partial_sum_at(64)?.lower() <= BigRational::one();
        out.push(check(format!("coefficients {e}"), ok, "c_k >= 0 and S_64 <= 1"));
        if c.exactness() == Exactness::ExactRational {
            let back = coefficients_from_stopping(&stopping_from_coefficients(&c));
            let bad = same_prefix(&c, &back, 64)?;
            out.push(check(
                format!("round trip {e}"),
                bad.is_none(),
                bad.map_or("c -> d -> c exact for k <= 64".into(), |k| format!("differs at k = {k}")),
            ));
        }
    }

    let sqrt = CoefficientSeries::sqrt();
    let bad = same_prefix(&CoefficientSeries::power(q(1, 2))?, &sqrt, 64)?;
    out.push(check("power 1/2 equals sqrt", bad.is_none(), "k <= 64"));
    let quarter = CoefficientSeries::power(q(1, 4))?;
    let bad = same_prefix(&compose(&sqrt, &sqrt, 32)?, &quarter, 32)?;
    out.push(check("sqrt of sqrt equals power 1/4", bad.is_none(), "k <= 32"));

    let grid: Vec<f64> = (1..=19).map(|i| i as f64 * 0.05).collect();
    for e in &entries {
        let c = e.build()?;
        let mut dominance = true;
        let mut derivative = true;
        for &p in &grid {
            let en = expected_inputs_alg1(&c, p)?;
            let cr = cramer_rao_bound(&c, p)?;
            dominance &= en.upper() >= cr.lower();
            let h = 1e-6;
            let fd = (eval_f(&c, p + h, 1e-14)?.value - eval_f(&c, p - h, 1e-14)?.value) / (2.0 * h);
            let d = eval_f_prime(&c, p, 1e-12)?.value;
            derivative &= (fd - d).abs() <= 1e-6 + 1e-5 * d.abs();
        }
        out.push(check(format!("lower bound {e}"), dominance, "f/p >= information bound on 0.05..0.95"));
        out.push(check(format!("derivative {e}"), derivative, "f' matches central differences"));
    }

    let opts = Summary {
        z: super::stats::z_for_confidence(super::DEFAULT_CONFIDENCE),
        sigma,
        tail_gate_max: 30,
        tail: true,
        histogram: true,
    };
    let modes = [
        ("rand", Mode::Randomized),
        ("nonrand", Mode::NonRandomized { dyadic_shortcut: false }),
    ];
    for (i, e) in entries.iter().enumerate() {
        let factory = Factory::series(&e.build()?);
        for (j, (label, mode)) in modes.iter().enumerate() {
            for (k, &p) in [0.1, 0.5, 0.9].iter().enumerate() {
                let seed = point_seed(point_seed(point_seed(seed, i), j), k);
                let t = replicate(&factory, *mode, p, reps, seed)?;
                let law = reference_law(&factory, p, *mode)?;
                let rec = summarize(&t, p, Some(&law), *mode == Mode::Randomized, opts);
                let failed: Vec<&str> =
                    rec.gates.iter().filter(|g| !g.pass).map(|g| g.name.as_str()).collect();
                out.push(check(
                    format!("{label} {e} p={p}"),
                    failed.is_empty(),
                    if failed.is_empty() {
                        format!("mean Y {:.4}, mean N {:.3}", rec.mean_y.value, rec.mean_n.value)
                    } else {
                        format!("failed gates: {}", failed.join(", "))
                    },
                ));
            }
        }
    }

    let factory = Factory::series(&sqrt);
    let t = replicate(&factory, Mode::Randomized, 0.25, reps, point_seed(seed, 1000))?;
    let rec = summarize(&t, 0.25, None, false, opts);
    let joint = test_joint_law(&rec, &sqrt, 0.25, sigma)?;
    out.push(check(
        "joint law sqrt p=0.25",
        joint.pass,
        format!("{} cells, chi-square p-value {:.3}", joint.cells.len(), joint.chi_square.p_value),
    ));

    for (i, p) in [0.1, 0.5, 0.9].into_iter().enumerate() {
        let mut coins = SimCoins::new(p, point_seed(seed, 2000 + i), 0);
        let (mut ones, mut pairs) = (0u64, 0u64);
        for _ in 0..reps {
            let (b, n) = von_neumann_bit(&mut coins);
            ones += b as u64;
            pairs += n;
        }
        let m = reps as f64;
        let z_bit = (ones as f64 / m - 0.5) / (0.25 / m).sqrt();
        let s = 2.0 * p * (1.0 - p);
        let z_pairs = (pairs as f64 / m - 1.0 / s) / ((1.0 - s) / (s * s) / m).sqrt();
        out.push(check(
            format!("fair bits p={p}"),
            z_bit.abs() < sigma && z_pairs.abs() < sigma,
            format!("z(bit) = {z_bit:.2}, z(pairs) = {z_pairs:.2}"),
        ));
    }
    Ok(out)
}
