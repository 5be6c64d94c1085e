//! Interval estimates and test statistics used by the gates.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Two-sided standard normal quantile for the given confidence level.
pub fn z_for_confidence(confidence: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    normal.inverse_cdf(1.0 - (1.0 - confidence) / 2.0)
}

/// Wilson score interval for `successes` out of `n`.
pub fn wilson(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (phat + z2 / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Sample mean and standard deviation from integer moments.
pub fn mean_sd(sum: u128, sum_sq: u128, n: u64) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let nf = n as f64;
    let mean = sum as f64 / nf;
    if n == 1 {
        return (mean, 0.0);
    }
    // Centre in exact integer arithmetic when the square fits.
    let var = match sum.checked_mul(sum) {
        Some(s2) => {
            let n128 = n as u128;
            let centred = (sum_sq - s2 / n128) as f64 - (s2 % n128) as f64 / nf;
            centred / (nf - 1.0)
        }
        None => (sum_sq as f64 - sum as f64 * mean) / (nf - 1.0),
    };
    (mean, var.max(0.0).sqrt())
}

/// Normal-approximation interval for a mean.
pub fn mean_interval(mean: f64, sd: f64, n: u64, z: f64) -> (f64, f64) {
    let half = z * sd / (n as f64).sqrt();
    (mean - half, mean + half)
}

/// Pooled two-proportion z statistic.
pub fn two_proportion_z(k1: u64, n1: u64, k2: u64, n2: u64) -> f64 {
    let (p1, p2) = (k1 as f64 / n1 as f64, k2 as f64 / n2 as f64);
    let pooled = (k1 + k2) as f64 / (n1 + n2) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    if se == 0.0 {
        return if p1 == p2 { 0.0 } else { f64::INFINITY };
    }
    (p1 - p2) / se
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Goodness of fit over a complete partition: `expected` probabilities sum to one.
/// Cells with zero expected probability are skipped.
pub fn chi_square(observed: &[u64], expected: &[f64]) -> ChiSquare {
    let total: u64 = observed.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&o, &e) in observed.iter().zip(expected) {
        if e <= 0.0 {
            continue;
        }
        let m = e * total as f64;
        stat += (o as f64 - m).powi(2) / m;
        cells += 1;
    }
    let df = cells.saturating_sub(1).max(1);
    let dist = ChiSquared::new(df as f64).expect("positive df");
    ChiSquare {
        statistic: stat,
        df,
        p_value: 1.0 - dist.cdf(stat),
    }
}

/// Least-squares line `y = slope x + intercept`, with the slope's standard error.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let slope_se = if xs.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    LineFit {
        slope,
        intercept,
        slope_se,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        assert!((z_for_confidence(0.95) - 1.959_963_985).abs() < 1e-6);
        assert!((z_for_confidence(0.9999) - 3.890_591_886).abs() < 1e-6);
    }

    #[test]
    fn wilson_known_value() {
        // 40/100 at 95%: (0.3094, 0.4980).
        let (lo, hi) = wilson(40, 100, z_for_confidence(0.95));
        assert!((lo - 0.309_4).abs() < 1e-4 && (hi - 0.498_0).abs() < 1e-4);
        assert_eq!(wilson(0, 10, 2.0).0, 0.0);
    }

    #[test]
    fn moments() {
        // 1, 2, 3, 4: mean 2.5, sd sqrt(5/3).
        let (m, s) = mean_sd(10, 30, 4);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn fit_and_tests() {
        let f = linear_fit(&[0.0, 1.0, 2.0, 3.0], &[1.0, 3.0, 5.0, 7.0]);
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert_eq!(two_proportion_z(50, 100, 50, 100), 0.0);
        let c = chi_square(&[50, 50], &[0.5, 0.5]);
        assert_eq!(c.statistic, 0.0);
        assert!((c.p_value - 1.0).abs() < 1e-12);
    }
}
