//! Sweeps over `N` and seeds, exponent fits, extrapolation, and the
//! validation batteries.

mod dist;
mod fit;
mod ldp;
pub mod stats;
pub mod validation;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{make_environment, DisorderSpec, Environment};
use crate::polymer::{PolymerEngine, PolymerParams, PolymerRangeMarginal, Window};
use crate::rates::{Exponent, LimitDescriptor, Region, RegionLabel};
use crate::varsolve::{closed_form_limit, solve_adaptive, variant_of, PathSource, DEFAULT_WINDOW_CAP};
use crate::{Error, Result};

pub use dist::{run_distributional, run_tail_check, DistributionalReport, TailReport, TailRow};
pub use fit::{extrapolate, fit_exponent, ExponentFit, Extrapolation, ExtrapolationModel};
pub use ldp::{default_ldp_n_list, run_ldp_validation, LdpRegime, LdpReport, LdpRow};

/// Default `eta` ladder of the fluctuation check.
pub const ETA_LADDER: [f64; 6] = [0.5, 0.25, 0.1, 0.05, 0.02, 0.01];
/// Mass that must fall in `[eta, 1/eta] N^xi` for some `eta`.
pub const XI_MASS_EPS: f64 = 0.1;
/// Half-width of the velocity band in the endpoint check.
pub const VELOCITY_HALF_WIDTH: f64 = 0.1;
/// Half-width of the rescaled range-width band.
pub const WIDTH_HALF_WIDTH: f64 = 0.3;
/// Mass required in the width and velocity bands.
pub const BAND_MASS: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    #[serde(alias = "logZ_limit")]
    LogzLimit,
    XiHistogram,
    VariationalCoupling,
    Ldp,
    Distributional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToleranceKind {
    Relative,
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub value: f64,
    pub kind: ToleranceKind,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { value: 0.05, kind: ToleranceKind::Relative }
    }
}

impl Tolerance {
    pub fn relative(value: f64) -> Self {
        Tolerance { value, kind: ToleranceKind::Relative }
    }

    pub fn absolute(value: f64) -> Self {
        Tolerance { value, kind: ToleranceKind::Absolute }
    }

    /// Distance between an estimate and its target in this tolerance's units.
    /// A zero target is compared absolutely.
    pub fn deviation(&self, estimate: f64, target: f64) -> f64 {
        let d = (estimate - target).abs();
        match self.kind {
            ToleranceKind::Relative if target != 0.0 => d / target.abs(),
            _ => d,
        }
    }
}

/// Parameters for an LDP run embedded in a sweep file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdpConfig {
    pub xi: f64,
    pub u: f64,
    pub v: f64,
    #[serde(default, rename = "N_list", alias = "n_list")]
    pub n_list: Vec<usize>,
}

fn default_p() -> f64 {
    0.5
}
fn default_checks() -> Vec<Check> {
    vec![Check::LogzLimit]
}
fn default_pass_fraction() -> f64 {
    0.8
}
fn default_window_cap() -> f64 {
    DEFAULT_WINDOW_CAP
}
fn default_unconverged() -> f64 {
    0.2
}
fn default_dist_resolution() -> usize {
    4096
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub alpha: f64,
    pub beta_hat: f64,
    pub h_hat: f64,
    pub gamma: Exponent,
    pub zeta: Exponent,
    /// Positive-tail weight of the disorder.
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(rename = "N_list", alias = "n_list")]
    pub n_list: Vec<usize>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_checks")]
    pub checks: Vec<Check>,
    #[serde(default)]
    pub tolerance: Tolerance,
    /// Fraction of seeds that must pass when judged seed by seed.
    #[serde(default = "default_pass_fraction")]
    pub pass_fraction: f64,
    #[serde(default = "default_window_cap")]
    pub window_cap: f64,
    /// Largest tolerated fraction of rows whose variational window did not converge.
    #[serde(default = "default_unconverged")]
    pub max_unconverged_fraction: f64,
    #[serde(default = "default_dist_resolution")]
    pub distributional_resolution: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ldp: Option<LdpConfig>,
}

impl SweepConfig {
    pub fn new(params: PolymerParams, n_list: Vec<usize>, seeds: Vec<u64>) -> Self {
        SweepConfig {
            alpha: params.alpha,
            beta_hat: params.beta_hat,
            h_hat: params.h_hat,
            gamma: params.gamma,
            zeta: params.zeta,
            p: default_p(),
            n_list,
            seeds,
            checks: default_checks(),
            tolerance: Tolerance::default(),
            pass_fraction: default_pass_fraction(),
            window_cap: default_window_cap(),
            max_unconverged_fraction: default_unconverged(),
            distributional_resolution: default_dist_resolution(),
            ldp: None,
        }
    }

    pub fn params(&self, n: usize) -> PolymerParams {
        PolymerParams { alpha: self.alpha, beta_hat: self.beta_hat, h_hat: self.h_hat, gamma: self.gamma, zeta: self.zeta, n }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(Error::Config("N_list is empty".into()));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("N_list must be strictly increasing".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds is empty".into()));
        }
        let mut s = self.seeds.clone();
        s.sort_unstable();
        if s.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        if !(self.tolerance.value > 0.0) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.pass_fraction) || !(0.0..=1.0).contains(&self.max_unconverged_fraction) {
            return Err(Error::Config("fractions must lie in [0,1]".into()));
        }
        if !(self.window_cap >= 1.0) {
            return Err(Error::Config("window_cap must be at least 1".into()));
        }
        DisorderSpec::new(self.alpha, self.p, 0)?;
        self.params(self.n_list[0]).validate()
    }

    pub fn environment(&self, seed: u64) -> Result<Environment> {
        make_environment(DisorderSpec::new(self.alpha, self.p, seed)?)
    }

    /// The region label, refusing boundaries other than the proven one.
    pub fn label(&self) -> Result<RegionLabel> {
        let label = self.params(self.n_list.first().copied().unwrap_or(1)).classify()?;
        if let Region::OtherBoundary(_) = label.region {
            return Err(Error::Unclassifiable(format!("{} is a boundary without a proven limit", label.region)));
        }
        Ok(label)
    }
}

/// One `(N, seed)` cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub region: String,
    pub alpha: f64,
    pub gamma: Exponent,
    pub zeta: Exponent,
    pub beta_hat: f64,
    pub h_hat: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    #[serde(rename = "log_Z")]
    pub log_z: f64,
    pub normalized: f64,
    pub target: f64,
    pub variational_value: Option<f64>,
    #[serde(rename = "window_A")]
    pub window_a: Option<f64>,
    pub unconverged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictRule {
    /// Extrapolated seed mean against the constant limit.
    Extrapolated,
    /// Fraction of seeds within tolerance at the largest `N`.
    SeedFraction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub rule: VerdictRule,
    pub passed: bool,
    /// Deviation of the extrapolated limit, or the passing fraction.
    pub statistic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub label: RegionLabel,
    pub rows: Vec<SweepRow>,
    /// Fit of the seed mean of `|log Z|` against `N`.
    pub exponent_fit: Option<ExponentFit>,
    pub extrapolation: Option<Extrapolation>,
    /// The constant limit when there is one.
    pub limit: Option<f64>,
    pub tolerance: Tolerance,
    pub pass_fraction: f64,
    pub unconverged_fraction: f64,
    pub verdict: Verdict,
}

impl ScalingReport {
    /// Rebuilds the verdict from the stored numbers.
    pub fn recompute_verdict(&self) -> Result<Verdict> {
        verdict_of(&self.label, &self.rows, self.limit, self.tolerance, self.pass_fraction)
    }
}

fn row_deviation(label: &RegionLabel, tol: Tolerance, row: &SweepRow) -> f64 {
    if label.limit == Some(LimitDescriptor::Unity) {
        // Z -> 1: compare Z itself
        (row.log_z.exp() - 1.0).abs()
    } else {
        tol.deviation(row.normalized, row.target)
    }
}

fn seed_means(rows: &[SweepRow], f: impl Fn(&SweepRow) -> f64) -> Vec<(f64, f64)> {
    let mut ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    ns.dedup();
    ns.into_iter()
        .map(|n| {
            let vals: Vec<f64> = rows.iter().filter(|r| r.n == n).map(&f).collect();
            (n as f64, stats::mean(&vals))
        })
        .collect()
}

fn extrapolation_of(rows: &[SweepRow]) -> Result<Extrapolation> {
    extrapolate(&seed_means(rows, |r| r.normalized), ExtrapolationModel::PowerCorrection)
}

fn verdict_of(
    label: &RegionLabel,
    rows: &[SweepRow],
    limit: Option<f64>,
    tol: Tolerance,
    pass_fraction: f64,
) -> Result<Verdict> {
    let n_count = seed_means(rows, |r| r.normalized).len();
    if let (Some(target), true) = (limit, n_count >= 4) {
        if label.limit != Some(LimitDescriptor::Unity) {
            let ex = extrapolation_of(rows)?;
            let dev = tol.deviation(ex.limit, target);
            return Ok(Verdict { rule: VerdictRule::Extrapolated, passed: !ex.flagged && dev <= tol.value, statistic: dev });
        }
    }
    let n_max = rows.iter().map(|r| r.n).max().ok_or_else(|| Error::Config("empty sweep".into()))?;
    let last: Vec<&SweepRow> = rows.iter().filter(|r| r.n == n_max).collect();
    let good = last.iter().filter(|r| row_deviation(label, tol, r) <= tol.value).count();
    let frac = good as f64 / last.len() as f64;
    Ok(Verdict { rule: VerdictRule::SeedFraction, passed: frac + 1e-12 >= pass_fraction, statistic: frac })
}

/// Normalized `log Z` along `N_list` for every seed, against the closed-form
/// limit or the variational value on the same environment at resolution `N^xi`.
pub fn run_logz_sweep(config: &SweepConfig) -> Result<ScalingReport> {
    run_logz_sweep_with(config, &PolymerEngine::new())
}

pub fn run_logz_sweep_with(config: &SweepConfig, engine: &PolymerEngine) -> Result<ScalingReport> {
    config.validate()?;
    let label = config.label()?;
    let (xi, theta) = match (label.xi, label.logz_exponent) {
        (Some(x), Some(t)) => (x, t),
        _ => return Err(Error::Unclassifiable(label.region.to_string())),
    };
    let variant = variant_of(&label.region);
    let limit = match variant {
        Some(_) => None,
        None => Some(closed_form_limit(&label, config.beta_hat, config.h_hat)?.value),
    };
    let envs: Vec<Environment> = config.seeds.iter().map(|&s| config.environment(s)).collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(config.n_list.len() * config.seeds.len());
    for &n in &config.n_list {
        let params = config.params(n);
        let cells: Vec<SweepRow> = config
            .seeds
            .par_iter()
            .zip(envs.par_iter())
            .map(|(&seed, env)| {
                let log_z = engine.log_partition(env, &params, Window::Auto)?;
                let normalized = (n as f64).powf(-theta) * log_z;
                let (target, var, window, unconverged) = match variant {
                    None => (limit.expect("closed form"), None, None, false),
                    Some(variant) => {
                        let source = PathSource::Coupled { env, resolution: (n as f64).powf(xi) };
                        let r = solve_adaptive(source, variant, config.beta_hat, config.h_hat, config.window_cap)?;
                        (r.value, Some(r.value), Some(r.window), r.unconverged)
                    }
                };
                Ok(SweepRow {
                    region: label.region.to_string(),
                    alpha: config.alpha,
                    gamma: config.gamma,
                    zeta: config.zeta,
                    beta_hat: config.beta_hat,
                    h_hat: config.h_hat,
                    n,
                    seed,
                    log_z,
                    normalized,
                    target,
                    variational_value: var,
                    window_a: window,
                    unconverged,
                })
            })
            .collect::<Result<_>>()?;
        rows.extend(cells);
        engine.clear();
    }
    let abs_means = seed_means(&rows, |r| r.log_z.abs());
    let exponent_fit = if abs_means.len() >= 3 && abs_means.iter().all(|p| p.1 > 0.0) {
        fit_exponent(&abs_means).ok()
    } else {
        None
    };
    let extrapolation = if abs_means.len() >= 4 { extrapolation_of(&rows).ok() } else { None };
    let unconverged_fraction = rows.iter().filter(|r| r.unconverged).count() as f64 / rows.len() as f64;
    let verdict = verdict_of(&label, &rows, limit, config.tolerance, config.pass_fraction)?;
    Ok(ScalingReport {
        label,
        rows,
        exponent_fit,
        extrapolation,
        limit,
        tolerance: config.tolerance,
        pass_fraction: config.pass_fraction,
        unconverged_fraction,
        verdict,
    })
}

/// Band check on a rescaled observable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandCheck {
    pub center: f64,
    pub half_width: f64,
    pub mass: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiReport {
    pub label: RegionLabel,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    /// `(eta, mass of max(|M^-|, M^+) in [eta, 1/eta] N^xi)`.
    pub ladder: Vec<(f64, f64)>,
    pub ladder_passed: bool,
    /// Range width `(M^+ - M^-) / N^xi` near its limit.
    pub width: Option<BandCheck>,
    /// `|S_N| / N` near the limiting velocity.
    pub velocity: Option<BandCheck>,
    pub passed: bool,
}

/// Polymer mass of cells with `max(a, b)` in `[lo, hi]`.
pub fn extent_mass(marg: &PolymerRangeMarginal, lo: f64, hi: f64) -> f64 {
    marg.iter()
        .filter(|&(a, b, _)| {
            let m = a.max(b) as f64;
            m >= lo && m <= hi
        })
        .map(|(_, _, p)| p.prob())
        .sum()
}

/// Polymer mass of cells with width `a + b` in `[lo, hi]`.
pub fn width_mass(marg: &PolymerRangeMarginal, lo: f64, hi: f64) -> f64 {
    marg.iter()
        .filter(|&(a, b, _)| {
            let w = (a + b) as f64;
            w >= lo && w <= hi
        })
        .map(|(_, _, p)| p.prob())
        .sum()
}

/// Endpoint mass with `| |x|/N - v | <= half_width`.
pub fn velocity_mass(endpoint: &crate::polymer::EndpointMarginal, v: f64, half_width: f64) -> f64 {
    let n = endpoint.n as i64;
    (-n..=n)
        .filter(|x| ((x.abs() as f64) / n as f64 - v).abs() <= half_width)
        .map(|x| endpoint.prob(x))
        .sum()
}

/// Fluctuation check at the largest `N` for the first seed.
pub fn run_xi_check(config: &SweepConfig) -> Result<XiReport> {
    run_xi_check_at(config, *config.n_list.last().ok_or_else(|| Error::Config("N_list is empty".into()))?)
}

/// Fluctuation check at a given `N` for the first seed.
pub fn run_xi_check_at(config: &SweepConfig, n: usize) -> Result<XiReport> {
    config.validate()?;
    let label = config.label()?;
    let xi = label.xi.ok_or_else(|| Error::Unclassifiable(label.region.to_string()))?;
    let seed = config.seeds[0];
    let env = config.environment(seed)?;
    let params = config.params(n);
    let engine = PolymerEngine::new();
    let marg = engine.range_marginal(&env, &params, Window::Auto)?;
    let scale = (n as f64).powf(xi);
    let ladder: Vec<(f64, f64)> = ETA_LADDER.iter().map(|&eta| (eta, extent_mass(&marg, eta * scale, scale / eta))).collect();
    let ladder_passed = ladder.iter().any(|&(_, m)| m >= 1.0 - XI_MASS_EPS);
    let closed = match variant_of(&label.region) {
        None => Some(closed_form_limit(&label, config.beta_hat, config.h_hat)?),
        Some(_) => None,
    };
    let width = closed.as_ref().and_then(|c| c.width).filter(|_| label.limit == Some(LimitDescriptor::Folding)).map(|w| {
        let mass = width_mass(&marg, (w - WIDTH_HALF_WIDTH) * scale, (w + WIDTH_HALF_WIDTH) * scale);
        BandCheck { center: w, half_width: WIDTH_HALF_WIDTH, mass, passed: mass >= BAND_MASS }
    });
    let velocity = match closed.as_ref().and_then(|c| c.velocity) {
        Some(v) => {
            let ep = engine.endpoint_marginal(&env, &params, Window::Auto, 1e-12)?;
            let mass = velocity_mass(&ep, v, VELOCITY_HALF_WIDTH);
            Some(BandCheck { center: v, half_width: VELOCITY_HALF_WIDTH, mass, passed: mass >= BAND_MASS })
        }
        None => None,
    };
    let passed = ladder_passed && width.is_none_or(|b| b.passed) && velocity.is_none_or(|b| b.passed);
    Ok(XiReport { label, n, seed, ladder, ladder_passed, width, velocity, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r6() -> SweepConfig {
        let p = PolymerParams::new(2.0, 1.0, 1.0, Exponent::Value(0.0), Exponent::Value(-2.0), 100).unwrap();
        SweepConfig::new(p, vec![100, 200], vec![1, 2])
    }

    #[test]
    fn config_validation() {
        let mut c = r6();
        assert!(c.validate().is_ok());
        c.n_list = vec![];
        assert!(c.validate().is_err());
        c.n_list = vec![200, 100];
        assert!(c.validate().is_err());
        c = r6();
        c.seeds = vec![3, 3];
        assert!(c.validate().is_err());
    }

    #[test]
    fn r6_sweep_passes() {
        let rep = run_logz_sweep(&r6()).unwrap();
        assert_eq!(rep.rows.len(), 4);
        assert_eq!(rep.verdict.rule, VerdictRule::SeedFraction);
        assert!(rep.verdict.passed);
        assert_eq!(rep.recompute_verdict().unwrap(), rep.verdict);
        for r in &rep.rows {
            assert!((r.normalized + 2.0).abs() < 0.02, "{r:?}");
        }
    }

    #[test]
    fn boundary_other_than_proven_refused() {
        let p = PolymerParams::new(2.0, 1.0, 1.0, Exponent::Value(-1.0), Exponent::Value(-1.0), 10).unwrap();
        let c = SweepConfig::new(p, vec![10], vec![1]);
        assert!(matches!(run_logz_sweep(&c), Err(Error::Unclassifiable(_))));
    }

    #[test]
    fn free_walk_ladder() {
        let p = PolymerParams::new(2.0, 0.0, 0.0, Exponent::Disabled, Exponent::Disabled, 400).unwrap();
        let c = SweepConfig::new(p, vec![400], vec![1]);
        let rep = run_xi_check(&c).unwrap();
        assert!(rep.passed);
        assert!(rep.width.is_none() && rep.velocity.is_none());
    }

    #[test]
    fn tolerance_deviation() {
        assert!((Tolerance::relative(0.1).deviation(1.05, 1.0) - 0.05).abs() < 1e-12);
        assert_eq!(Tolerance::relative(0.1).deviation(0.5, 0.0), 0.5);
        assert_eq!(Tolerance::absolute(0.1).deviation(3.0, 1.0), 2.0);
    }
}
