//! Exact walk probabilities against the large-deviation rates.

use serde::{Deserialize, Serialize};

use super::fit::{extrapolate, Extrapolation, ExtrapolationModel};
use crate::rates::{kappa, rate_i, rate_ibar};
use crate::srw_exact::{confinement_probability, max_tail, RangeEngine};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LdpRegime {
    /// `xi < 1/2`: confinement in `[u, v] N^xi`, normalized by `N^{1-2xi}`.
    Folding,
    /// `1/2 < xi < 1`: reaching `u N^xi` and `v N^xi`, normalized by `N^{2xi-1}`.
    Stretching,
    /// `xi = 1`: the same events normalized by `N`.
    Ballistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdpRow {
    #[serde(rename = "N")]
    pub n: usize,
    /// `ln P` of the event.
    pub log_p: f64,
    /// `-ln P / N^{|2xi-1|}`.
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdpReport {
    pub xi: f64,
    pub u: f64,
    pub v: f64,
    pub regime: LdpRegime,
    pub target: f64,
    pub rows: Vec<LdpRow>,
    pub extrapolation: Extrapolation,
    /// `|limit - target| / target`.
    pub rel_error: f64,
}

impl LdpReport {
    pub fn passes(&self, rel_tol: f64) -> bool {
        !self.extrapolation.flagged && self.rel_error <= rel_tol
    }
}

/// `N = k^3` in the folding regime (so `N^{1/3}` is an integer), powers of two otherwise.
pub fn default_ldp_n_list(xi: f64) -> Vec<usize> {
    if xi < 0.5 {
        [8usize, 10, 13, 16, 20, 25, 32, 40].iter().map(|k| k * k * k).collect()
    } else if xi < 1.0 {
        (16..=40).step_by(4).map(|k| 1usize << k).collect()
    } else {
        (10..=22).step_by(2).map(|k| 1usize << k).collect()
    }
}

fn regime_of(xi: f64) -> Result<LdpRegime> {
    if !(xi > 0.0 && xi <= 1.0) {
        return Err(Error::param(format!("xi must lie in (0,1], got {xi}")));
    }
    if xi == 0.5 {
        return Err(Error::param("xi = 1/2 has no large-deviation scaling"));
    }
    Ok(if xi < 0.5 {
        LdpRegime::Folding
    } else if xi < 1.0 {
        LdpRegime::Stretching
    } else {
        LdpRegime::Ballistic
    })
}

fn log_reach(n: usize, a: f64, b: f64) -> f64 {
    let (a, b) = (a.ceil() as i64, b.ceil() as i64);
    match (a, b) {
        (0, _) => max_tail(n, b).ln(),
        (_, 0) => max_tail(n, a).ln(),
        _ => {
            if a > n as i64 || b > n as i64 {
                f64::NEG_INFINITY
            } else {
                RangeEngine::new(n).log_hit_both(a as usize, b as usize)
            }
        }
    }
}

/// Normalized `-ln P` of the regime's event along `n_list`, extrapolated and
/// compared with the rate function.
pub fn run_ldp_validation(xi: f64, u: f64, v: f64, n_list: &[usize]) -> Result<LdpReport> {
    let regime = regime_of(xi)?;
    if !(u <= 0.0 && v >= 0.0) {
        return Err(Error::param(format!("need u <= 0 <= v, got u={u}, v={v}")));
    }
    let target = match regime {
        LdpRegime::Folding => rate_ibar(u, v)?,
        LdpRegime::Stretching => rate_i(u, v)?,
        LdpRegime::Ballistic => kappa(u.abs().min(v) + v - u)?,
    };
    if target == 0.0 || !target.is_finite() {
        return Err(Error::param(format!("degenerate rate {target} at u={u}, v={v}")));
    }
    let n_list = if n_list.is_empty() { default_ldp_n_list(xi) } else { n_list.to_vec() };
    let rows: Vec<LdpRow> = n_list
        .iter()
        .map(|&n| {
            let nf = n as f64;
            let scale = nf.powf(xi);
            let log_p = match regime {
                LdpRegime::Folding => confinement_probability(n, u * scale, v * scale).ln(),
                _ => log_reach(n, -u * scale, v * scale),
            };
            let norm = match regime {
                LdpRegime::Ballistic => nf,
                _ => nf.powf((2.0 * xi - 1.0).abs()),
            };
            LdpRow { n, log_p, normalized: -log_p / norm }
        })
        .collect();
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.normalized)).collect();
    let extrapolation = extrapolate(&points, ExtrapolationModel::PowerCorrection)?;
    let rel_error = (extrapolation.limit - target).abs() / target;
    Ok(LdpReport { xi, u, v, regime, target, rows, extrapolation, rel_error })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_is_refused() {
        assert!(run_ldp_validation(0.5, -1.0, 1.0, &[]).is_err());
        assert!(run_ldp_validation(0.3, 1.0, 2.0, &[]).is_err());
    }

    #[test]
    fn ballistic_small() {
        let r = run_ldp_validation(1.0, 0.0, 0.5, &[256, 512, 1024, 2048, 4096]).unwrap();
        assert_eq!(r.regime, LdpRegime::Ballistic);
        assert!(r.rel_error < 0.05, "{r:?}");
    }
}
