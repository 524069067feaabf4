//! Law of the one-sided variational value, and the maximal-sum tail.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_exponent, ExponentFit};
use super::stats::{exponential_cdf, half_normal_cdf, ks_statistic};
use crate::env::{make_environment, tail_exceedances, DisorderSpec};
use crate::varsolve::{solve_one_sided, PathSource, Variant, DEFAULT_WINDOW_CAP};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionalReport {
    pub variant: Variant,
    pub beta_hat: f64,
    pub h_hat: f64,
    pub resolution: usize,
    pub samples: usize,
    /// Reference law, e.g. `half_normal(1)`.
    pub reference: String,
    pub ks: f64,
    pub unconverged: usize,
}

/// One-sided values for Gaussian environments `seed = 0..samples` against
/// `beta |Z|` (width-constrained) or `Exp(2h / beta^2)` (linear penalty).
pub fn run_distributional(
    variant: Variant,
    beta_hat: f64,
    h_hat: f64,
    samples: usize,
    resolution: usize,
) -> Result<DistributionalReport> {
    if samples < 2 || resolution == 0 {
        return Err(Error::param("need at least 2 samples and a positive resolution"));
    }
    if !(beta_hat > 0.0) {
        return Err(Error::param("beta_hat must be positive"));
    }
    if variant == Variant::R4 && !(h_hat > 0.0) {
        return Err(Error::param("the linear-penalty law needs h_hat > 0"));
    }
    if variant == Variant::R2 {
        return Err(Error::param("no reference law for the entropic variant"));
    }
    let values: Vec<(f64, bool)> = (0..samples as u64)
        .into_par_iter()
        .map(|s| {
            let env = make_environment(DisorderSpec::gaussian(s))?;
            let source = PathSource::Coupled { env: &env, resolution: resolution as f64 };
            let r = solve_one_sided(source, variant, beta_hat, h_hat, DEFAULT_WINDOW_CAP)?;
            Ok((r.value, r.unconverged))
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = values.iter().map(|v| v.0).collect();
    let unconverged = values.iter().filter(|v| v.1).count();
    let (ks, reference) = match variant {
        Variant::R3 => (ks_statistic(&xs, |x| half_normal_cdf(x, beta_hat)), format!("half_normal({beta_hat})")),
        _ => {
            let rate = 2.0 * h_hat / (beta_hat * beta_hat);
            (ks_statistic(&xs, |x| exponential_cdf(x, rate)), format!("exponential({rate})"))
        }
    };
    Ok(DistributionalReport { variant, beta_hat, h_hat, resolution, samples, reference, ks, unconverged })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub ell: usize,
    pub threshold: f64,
    pub probability: f64,
    pub std_error: f64,
    /// `P * T^alpha / ell`.
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub alpha: f64,
    pub p: f64,
    pub reps: usize,
    /// Slope of `ln P` against `ln T` at the smallest `ell`.
    pub slope: ExponentFit,
    pub rows: Vec<TailRow>,
    pub max_constant: f64,
}

/// Monte Carlo tail of `Omega*_ell` on an `(ell, T)` grid. `slope_thresholds`
/// are used at `ell = ells[0]` for the power-law fit.
pub fn run_tail_check(
    alpha: f64,
    p: f64,
    ells: &[usize],
    thresholds: &[f64],
    slope_thresholds: &[f64],
    reps: usize,
) -> Result<TailReport> {
    let spec = DisorderSpec::new(alpha, p, 0)?;
    let &ell0 = ells.first().ok_or_else(|| Error::param("empty ell list"))?;
    let est = tail_exceedances(spec, ell0, slope_thresholds, reps)?;
    let points: Vec<(f64, f64)> = slope_thresholds.iter().zip(&est).map(|(&t, e)| (t, e.probability)).collect();
    let slope = fit_exponent(&points)?;
    let mut rows = Vec::new();
    for &ell in ells {
        let est = tail_exceedances(spec, ell, thresholds, reps)?;
        for (&t, e) in thresholds.iter().zip(est) {
            rows.push(TailRow {
                ell,
                threshold: t,
                probability: e.probability,
                std_error: e.std_error,
                constant: e.probability * t.powf(alpha) / ell as f64,
            });
        }
    }
    let max_constant = rows.iter().map(|r| r.constant).fold(0.0, f64::max);
    Ok(TailReport { alpha, p, reps, slope, rows, max_constant })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_distributional_runs() {
        let r = run_distributional(Variant::R3, 1.0, 0.0, 300, 512).unwrap();
        assert!(r.ks < 0.1, "{r:?}");
        let r = run_distributional(Variant::R4, 1.0, 1.0, 300, 512).unwrap();
        assert!(r.ks < 0.1, "{r:?}");
        assert!(run_distributional(Variant::R2, 1.0, 1.0, 10, 64).is_err());
    }
}
