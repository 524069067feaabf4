//! Goodness-of-fit helpers.

use statrs::function::erf::erf;

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i + 1) as f64 / n - f).max(f - i as f64 / n)
    })
}

/// Largest gap between two CDFs given on the same lattice as probability vectors.
pub fn ks_distance_pmf(p: &[f64], q: &[f64]) -> f64 {
    let (mut cp, mut cq, mut d) = (0.0, 0.0, 0.0f64);
    for (a, b) in p.iter().zip(q) {
        cp += a;
        cq += b;
        d = d.max((cp - cq).abs());
    }
    d
}

/// CDF of `scale * |Z|`, `Z` standard normal.
pub fn half_normal_cdf(x: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        erf(x / (scale * std::f64::consts::SQRT_2))
    }
}

pub fn exponential_cdf(x: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-rate * x).exp_m1()
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_of_uniform_grid() {
        let s: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let d = ks_statistic(&s, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.005).abs() < 1e-12);
    }

    #[test]
    fn cdfs() {
        assert!((half_normal_cdf(1.0, 1.0) - 0.682_689_492_137_085_9).abs() < 1e-9, "{}", half_normal_cdf(1.0, 1.0));
        assert!((exponential_cdf(0.5, 2.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert_eq!(ks_distance_pmf(&[0.5, 0.5], &[0.25, 0.75]), 0.25);
    }
}
