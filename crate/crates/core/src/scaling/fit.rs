//! Log-log exponent fits and finite-size extrapolation.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const THETA_MIN: f64 = 0.01;
const THETA_MAX: f64 = 3.0;
const THETA_STEP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub theta: f64,
    pub stderr: f64,
    pub intercept: f64,
}

/// Ordinary least squares `y = c0 + c1 x`; returns `(c0, c1, residual sum of squares)`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let c1 = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let c0 = my - c1 * mx;
    let rss = x.iter().zip(y).map(|(a, b)| (b - c0 - c1 * a).powi(2)).sum();
    (c0, c1, rss)
}

/// Slope of `ln value` against `ln N` with its standard error.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<ExponentFit> {
    if points.len() < 3 {
        return Err(Error::param(format!("exponent fit needs at least 3 points, got {}", points.len())));
    }
    if let Some(&(n, v)) = points.iter().find(|&&(n, v)| !(v > 0.0 && n > 0.0 && v.is_finite())) {
        return Err(Error::param(format!("exponent fit needs positive values, got {v} at N={n}")));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (c0, c1, rss) = linear_fit(&x, &y);
    let mx = x.iter().sum::<f64>() / x.len() as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let dof = (points.len() - 2) as f64;
    let stderr = if sxx > 0.0 { (rss / dof / sxx).sqrt() } else { f64::INFINITY };
    Ok(ExponentFit { theta: c1, stderr, intercept: c0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtrapolationModel {
    /// `c0 + c1 N^{-theta}`, `theta` free.
    PowerCorrection,
    /// `c0 + c1 / ln N`.
    InvLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub limit: f64,
    /// Model that produced `limit`.
    pub model: ExtrapolationModel,
    pub theta: Option<f64>,
    pub c1: f64,
    /// Root mean squared residual of the fit.
    pub residual: f64,
    /// The fit failed and `limit` is the last raw value.
    pub flagged: bool,
}

fn power_fit(n: &[f64], y: &[f64], theta: f64) -> (f64, f64, f64) {
    let x: Vec<f64> = n.iter().map(|v| v.powf(-theta)).collect();
    linear_fit(&x, y)
}

fn inv_log_fit(n: &[f64], y: &[f64]) -> Extrapolation {
    let x: Vec<f64> = n.iter().map(|v| 1.0 / v.ln()).collect();
    let (c0, c1, rss) = linear_fit(&x, y);
    Extrapolation {
        limit: c0,
        model: ExtrapolationModel::InvLog,
        theta: None,
        c1,
        residual: (rss / n.len() as f64).sqrt(),
        flagged: false,
    }
}

fn power_extrapolation(n: &[f64], y: &[f64]) -> (Extrapolation, bool) {
    let steps = ((THETA_MAX - THETA_MIN) / THETA_STEP).round() as usize;
    let mut best = (f64::INFINITY, THETA_MIN);
    for i in 0..=steps {
        let th = THETA_MIN + i as f64 * THETA_STEP;
        let rss = power_fit(n, y, th).2;
        if rss < best.0 {
            best = (rss, th);
        }
    }
    // golden-section refinement inside the neighbouring grid cells
    let (mut lo, mut hi) = ((best.1 - THETA_STEP).max(THETA_MIN), (best.1 + THETA_STEP).min(THETA_MAX));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if power_fit(n, y, m1).2 <= power_fit(n, y, m2).2 {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let th = 0.5 * (lo + hi);
    let (c0, c1, rss) = power_fit(n, y, th);
    let (th, c0, c1, rss) = if rss <= best.0 { (th, c0, c1, rss) } else {
        let (c0, c1, rss) = power_fit(n, y, best.1);
        (best.1, c0, c1, rss)
    };
    let degenerate = th <= THETA_MIN + 1e-6 || th >= THETA_MAX - 1e-6;
    let e = Extrapolation {
        limit: c0,
        model: ExtrapolationModel::PowerCorrection,
        theta: Some(th),
        c1,
        residual: (rss / n.len() as f64).sqrt(),
        flagged: false,
    };
    (e, degenerate)
}

/// Limit of `value(N)` as `N -> inf`. The power model falls back to `1/ln N`
/// when its exponent sits on the edge of `[0.01, 3]` or the logarithmic model
/// fits better. A failed fit returns the last value with `flagged` set.
pub fn extrapolate(points: &[(f64, f64)], model: ExtrapolationModel) -> Result<Extrapolation> {
    if points.len() < 4 {
        return Err(Error::param(format!("extrapolation needs at least 4 points, got {}", points.len())));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.iter().any(|p| !(p.0 > 1.0)) {
        return Err(Error::param("extrapolation needs N > 1"));
    }
    let n: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let last = *y.last().expect("non-empty");
    let raw = Extrapolation { limit: last, model, theta: None, c1: 0.0, residual: f64::NAN, flagged: true };
    if y.iter().any(|v| !v.is_finite()) {
        return Ok(raw);
    }
    let fit = match model {
        ExtrapolationModel::InvLog => inv_log_fit(&n, &y),
        ExtrapolationModel::PowerCorrection => {
            let (p, degenerate) = power_extrapolation(&n, &y);
            let l = inv_log_fit(&n, &y);
            if degenerate || l.residual < p.residual {
                l
            } else {
                p
            }
        }
    };
    if fit.limit.is_finite() {
        Ok(fit)
    } else {
        Ok(raw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        (8..=16).map(|k| 2f64.powi(k)).map(|n| (n, f(n))).collect()
    }

    #[test]
    fn exponent_examples() {
        let f = fit_exponent(&grid(|n| n.powf(0.7))).unwrap();
        assert!((f.theta - 0.7).abs() < 1e-12 && f.stderr < 1e-12);
        let f = fit_exponent(&grid(|n| 3.0 * n.powf(0.7) * (1.0 + 1.0 / n.ln()))).unwrap();
        assert!((f.theta - 0.7).abs() < 0.05);
        let f = fit_exponent(&grid(|_| 2.5)).unwrap();
        assert!(f.theta.abs() < 1e-12);
        assert!(fit_exponent(&grid(|_| -1.0)).is_err());
        assert!(fit_exponent(&grid(|n| n)[..2]).is_err());
    }

    #[test]
    fn extrapolation_examples() {
        let e = extrapolate(&grid(|n| 5.0 + n.powf(-1.0 / 3.0)), ExtrapolationModel::PowerCorrection).unwrap();
        assert_eq!(e.model, ExtrapolationModel::PowerCorrection);
        assert!((e.limit - 5.0).abs() < 1e-3);
        let e = extrapolate(&grid(|_| 1.25), ExtrapolationModel::PowerCorrection).unwrap();
        assert!((e.limit - 1.25).abs() < 1e-12);
        let e = extrapolate(&grid(|n| 2.0 + 3.0 / n.ln()), ExtrapolationModel::PowerCorrection).unwrap();
        assert_eq!(e.model, ExtrapolationModel::InvLog);
        assert!((e.limit - 2.0).abs() < 0.1);
        let e = extrapolate(&grid(|n| if n > 1e4 { f64::NAN } else { 1.0 }), ExtrapolationModel::InvLog).unwrap();
        assert!(e.flagged);
        assert!(extrapolate(&grid(|n| n)[..3], ExtrapolationModel::InvLog).is_err());
    }
}
