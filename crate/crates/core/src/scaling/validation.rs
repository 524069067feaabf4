//! The acceptance batteries, grouped into suites.

use std::collections::BTreeMap;
use std::str::FromStr;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    run_distributional, run_ldp_validation, run_logz_sweep, run_tail_check, run_xi_check_at, stats, SweepConfig,
    Tolerance,
};
use crate::env::{make_environment, DisorderSpec};
use crate::polymer::{oracle_marginals, PolymerEngine, PolymerParams, Window};
use crate::rates::{
    accepting_regions, boundary_segments, classify_region, diagram_alphas, diagram_sign, kappa, region_exponents,
    Diagram, Exponent, Region,
};
use crate::srw_exact::{confined_survival_dp, confined_survival_spectral, log_endpoint_pmf};
use crate::varsolve::Variant;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: String,
    pub passed: bool,
    pub summary: String,
    pub metrics: BTreeMap<String, f64>,
}

impl CriterionOutcome {
    fn new(id: u8, passed: bool, summary: String, metrics: BTreeMap<String, f64>) -> Self {
        CriterionOutcome { id, title: title(id).to_string(), passed, summary, metrics }
    }

    pub fn line(&self) -> String {
        format!("[{}] {:>2} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.id, self.title, self.summary)
    }
}

pub const CRITERIA: [u8; 12] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12];

pub fn title(id: u8) -> &'static str {
    match id {
        1 => "oracle equivalence",
        2 => "DP vs spectral survival",
        3 => "R6 limit and two-site range",
        4 => "R5 folding limit and width",
        5 => "Rt4 limit",
        6 => "Rt4/Rt5 boundary limit and velocity",
        7 => "R1 Z -> 1 and endpoint law",
        8 => "R2/R3/R4 coupling",
        9 => "range large deviations",
        10 => "one-sided limit laws",
        11 => "maximal-sum tail",
        12 => "classifier partition",
        _ => "unknown",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Oracle,
    Ldp,
    Distributional,
    Regions,
    All,
}

impl Suite {
    pub fn criteria(self) -> &'static [u8] {
        match self {
            Suite::Oracle => &[1, 2],
            Suite::Ldp => &[9],
            Suite::Distributional => &[10, 11],
            Suite::Regions => &[3, 4, 5, 6, 7, 8, 12],
            Suite::All => &CRITERIA,
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(Suite::Oracle),
            "ldp" => Ok(Suite::Ldp),
            "distributional" => Ok(Suite::Distributional),
            "regions" => Ok(Suite::Regions),
            "all" => Ok(Suite::All),
            other => Err(Error::Config(format!("unknown suite '{other}'"))),
        }
    }
}

/// Runs one criterion; an error inside it is reported as a failure.
pub fn run_criterion(id: u8) -> CriterionOutcome {
    let r = match id {
        1 => oracle_equivalence(),
        2 => dp_spectral(),
        3 => region6(),
        4 => region5(),
        5 => region_rt4(),
        6 => boundary(),
        7 => region1(),
        8 => coupling(),
        9 => ldp(),
        10 => distributional(),
        11 => tail(),
        12 => classifier_partition(),
        _ => Err(Error::Config(format!("no criterion {id}"))),
    };
    r.unwrap_or_else(|e| CriterionOutcome::new(id, false, format!("error: {e}"), BTreeMap::new()))
}

pub fn run_suite(suite: Suite) -> Vec<CriterionOutcome> {
    suite.criteria().iter().map(|&id| run_criterion(id)).collect()
}

fn metrics<const K: usize>(items: [(&str, f64); K]) -> BTreeMap<String, f64> {
    items.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, items: &[T]) -> T {
    items[(rng.next_u64() % items.len() as u64) as usize]
}

fn oracle_equivalence() -> Result<CriterionOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (mut worst_z, mut worst_range, mut worst_end) = (0.0f64, 0.0f64, 0.0f64);
    let mut failures = 0;
    for _ in 0..50 {
        let alpha = pick(&mut rng, &[0.6, 0.8, 1.3, 1.5, 1.8, 2.0]);
        let p = pick(&mut rng, &[0.5, 0.7, 1.0]);
        let beta_hat = 1.5 * unit(&mut rng);
        let h_hat = 2.0 * unit(&mut rng) - 1.0;
        let gamma = Exponent::Value(1.5 * unit(&mut rng) - 0.5);
        let zeta = if unit(&mut rng) < 0.2 { Exponent::Disabled } else { Exponent::Value(1.5 * unit(&mut rng) - 0.5) };
        let n = 1 + (rng.next_u64() % 16) as usize;
        let seed = rng.next_u64();
        let env = make_environment(DisorderSpec::new(alpha, p, seed)?)?;
        let params = PolymerParams::new(alpha, beta_hat, h_hat, gamma, zeta, n)?;
        let oracle = oracle_marginals(&env, &params)?;
        let engine = PolymerEngine::new();
        let z = engine.log_partition(&env, &params, Window::Auto)?;
        let dz = (z - oracle.log_z).abs() / oracle.log_z.abs().max(1.0);
        let marg = engine.range_marginal(&env, &params, Window::Auto)?;
        let mut dr = 0.0f64;
        for (a, b, lp) in marg.iter() {
            dr = dr.max((lp.prob() - oracle.range.get(&(a, b)).copied().unwrap_or(0.0)).abs());
        }
        for (&(a, b), &q) in &oracle.range {
            dr = dr.max((marg.log_prob(a, b).prob() - q).abs());
        }
        let ep = engine.endpoint_marginal(&env, &params, Window::Auto, 1e-14)?;
        let de = (-(n as i64)..=n as i64)
            .map(|x| (ep.prob(x) - oracle.endpoint[(x + n as i64) as usize]).abs())
            .fold(0.0, f64::max);
        if !(dz <= 1e-12 && dr <= 1e-10 && de <= 1e-10) {
            failures += 1;
        }
        worst_z = worst_z.max(dz);
        worst_range = worst_range.max(dr);
        worst_end = worst_end.max(de);
    }
    Ok(CriterionOutcome::new(
        1,
        failures == 0,
        format!("50 cases, {failures} failing; max rel |dlogZ| {worst_z:.1e}, max |dP| range {worst_range:.1e}, endpoint {worst_end:.1e}"),
        metrics([("failures", failures as f64), ("max_rel_logz", worst_z), ("max_range", worst_range), ("max_endpoint", worst_end)]),
    ))
}

fn dp_spectral() -> Result<CriterionOutcome> {
    let (mut worst, mut count, mut bad) = (0.0f64, 0usize, 0usize);
    for n in 1..=64 {
        for width in 0..=12usize {
            for a in 0..=width {
                let b = width - a;
                let dp = confined_survival_dp(n, a, b).ln();
                let sp = confined_survival_spectral(n, a, b).ln();
                count += 1;
                let d = if dp == sp { 0.0 } else { ((sp - dp).exp() - 1.0).abs() };
                if !(d <= 1e-12) {
                    bad += 1;
                }
                if d.is_finite() {
                    worst = worst.max(d);
                } else {
                    worst = f64::INFINITY;
                }
            }
        }
    }
    Ok(CriterionOutcome::new(
        2,
        bad == 0,
        format!("{count} (N, a, b) triples, {bad} off; max rel diff {worst:.1e}"),
        metrics([("triples", count as f64), ("bad", bad as f64), ("max_rel", worst)]),
    ))
}

fn region6() -> Result<CriterionOutcome> {
    let n = 1000;
    let params = PolymerParams::new(2.0, 1.0, 1.0, Exponent::Value(0.0), Exponent::Value(-2.0), n)?;
    let engine = PolymerEngine::new();
    let (mut worst_dev, mut worst_mass, mut good) = (0.0f64, 1.0f64, 0);
    for seed in 0..10u64 {
        let env = make_environment(DisorderSpec::gaussian(seed))?;
        let marg = engine.range_marginal(&env, &params, Window::Auto)?;
        let dev = ((n as f64).powi(-2) * marg.log_z + 2.0).abs();
        let mass = marg.log_prob(1, 0).prob() + marg.log_prob(0, 1).prob();
        if dev <= 1e-3 && mass >= 0.999 {
            good += 1;
        }
        worst_dev = worst_dev.max(dev);
        worst_mass = worst_mass.min(mass);
    }
    Ok(CriterionOutcome::new(
        3,
        good == 10,
        format!("{good}/10 seeds; max |N^zeta logZ + 2| {worst_dev:.2e}, min two-site mass {worst_mass:.6}"),
        metrics([("good", good as f64), ("max_dev", worst_dev), ("min_mass", worst_mass)]),
    ))
}

fn geometric(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|k| 1usize << k).collect()
}

fn region5() -> Result<CriterionOutcome> {
    let params = PolymerParams::new(2.0, 1.0, 1.0, Exponent::Value(0.2), Exponent::Value(0.0), 1024)?;
    let mut cfg = SweepConfig::new(params, geometric(10, 17), (0..5).collect());
    cfg.tolerance = Tolerance::relative(0.05);
    let rep = run_logz_sweep(&cfg)?;
    let ex = rep.extrapolation.ok_or_else(|| Error::Numerical("no extrapolation".into()))?;
    let target = rep.limit.unwrap_or(f64::NAN);
    let xi = run_xi_check_at(&cfg, 100_000)?;
    let width = xi.width.ok_or_else(|| Error::Numerical("no width band".into()))?;
    let passed = rep.verdict.passed && width.passed;
    Ok(CriterionOutcome::new(
        4,
        passed,
        format!(
            "limit {:.4} vs {:.4} (dev {:.2}%), width mass {:.3} at N=1e5",
            ex.limit,
            target,
            100.0 * rep.verdict.statistic,
            width.mass
        ),
        metrics([("limit", ex.limit), ("target", target), ("deviation", rep.verdict.statistic), ("width_mass", width.mass)]),
    ))
}

fn region_rt4() -> Result<CriterionOutcome> {
    let params = PolymerParams::new(2.0, 1.0, -1.0, Exponent::Value(0.6), Exponent::Value(0.25), 512)?;
    let mut cfg = SweepConfig::new(params, geometric(9, 12), (0..3).collect());
    cfg.tolerance = Tolerance::relative(0.10);
    let rep = run_logz_sweep(&cfg)?;
    let ex = rep.extrapolation.ok_or_else(|| Error::Numerical("no extrapolation".into()))?;
    Ok(CriterionOutcome::new(
        5,
        rep.verdict.passed,
        format!("limit {:.4} vs 0.5 (dev {:.2}%)", ex.limit, 100.0 * rep.verdict.statistic),
        metrics([("limit", ex.limit), ("deviation", rep.verdict.statistic)]),
    ))
}

fn boundary() -> Result<CriterionOutcome> {
    let params = PolymerParams::new(2.0, 1.0, -1.0, Exponent::Value(0.5), Exponent::Value(0.0), 128)?;
    let mut cfg = SweepConfig::new(params, geometric(7, 10), vec![0]);
    cfg.tolerance = Tolerance::relative(0.05);
    let rep = run_logz_sweep(&cfg)?;
    let ex = rep.extrapolation.ok_or_else(|| Error::Numerical("no extrapolation".into()))?;
    let target = rep.limit.unwrap_or(f64::NAN);
    let xi = run_xi_check_at(&cfg, 1024)?;
    let vel = xi.velocity.ok_or_else(|| Error::Numerical("no velocity band".into()))?;
    let raw_last = rep.rows.last().map(|r| r.normalized).unwrap_or(f64::NAN);
    Ok(CriterionOutcome::new(
        6,
        rep.verdict.passed && vel.passed,
        format!(
            "limit {:.4} vs {:.4} (dev {:.1}%), N=1024 value {:.4}; velocity mass {:.4}",
            ex.limit,
            target,
            100.0 * rep.verdict.statistic,
            raw_last,
            vel.mass
        ),
        metrics([("limit", ex.limit), ("target", target), ("deviation", rep.verdict.statistic), ("velocity_mass", vel.mass)]),
    ))
}

fn region1() -> Result<CriterionOutcome> {
    let n = 1 << 14;
    let params = PolymerParams::new(2.0, 1.0, 1.0, Exponent::Value(0.5), Exponent::Value(1.0), n)?;
    let engine = PolymerEngine::new();
    let free: Vec<f64> = (-(n as i64)..=n as i64).map(|x| log_endpoint_pmf(n as u64, x).exp()).collect();
    let (mut z_good, mut ks_good, mut worst_ks) = (0, 0, 0.0f64);
    let (mut z_lo, mut z_hi) = (f64::INFINITY, 0.0f64);
    for seed in 0..20u64 {
        let env = make_environment(DisorderSpec::gaussian(seed))?;
        let ep = engine.endpoint_marginal(&env, &params, Window::Auto, 1e-8)?;
        let log_z = engine.log_partition(&env, &params, Window::Auto)?;
        let z = log_z.exp();
        if (0.95..=1.05).contains(&z) {
            z_good += 1;
        }
        z_lo = z_lo.min(z);
        z_hi = z_hi.max(z);
        let ks = stats::ks_distance_pmf(&ep.pmf, &free);
        if ks <= 0.02 {
            ks_good += 1;
        }
        worst_ks = worst_ks.max(ks);
    }
    Ok(CriterionOutcome::new(
        7,
        z_good >= 18 && ks_good == 20,
        format!("Z in [0.95,1.05] for {z_good}/20 (range {z_lo:.3}..{z_hi:.3}); KS <= 0.02 for {ks_good}/20 (max {worst_ks:.4})"),
        metrics([("z_good", z_good as f64), ("ks_good", ks_good as f64), ("max_ks", worst_ks), ("z_min", z_lo), ("z_max", z_hi)]),
    ))
}

fn coupling() -> Result<CriterionOutcome> {
    let cases = [("R2", 0.0, 10.0), ("R3", -0.6, 10.0), ("R4", -0.3, 0.0)];
    let mut parts = Vec::new();
    let mut m = BTreeMap::new();
    let mut passed = true;
    for (name, gamma, zeta) in cases {
        let params = PolymerParams::new(2.0, 1.0, 1.0, Exponent::Value(gamma), Exponent::Value(zeta), 4096)?;
        let mut cfg = SweepConfig::new(params, vec![4096], (0..10).collect());
        cfg.tolerance = Tolerance::relative(0.10);
        cfg.pass_fraction = 0.8;
        let rep = run_logz_sweep(&cfg)?;
        if rep.label.region.to_string() != name {
            return Err(Error::Numerical(format!("expected {name}, classified {}", rep.label.region)));
        }
        let devs: Vec<f64> = rep.rows.iter().map(|r| cfg.tolerance.deviation(r.normalized, r.target)).collect();
        let good = devs.iter().filter(|&&d| d <= 0.10).count();
        let med = {
            let mut d = devs.clone();
            d.sort_by(f64::total_cmp);
            d[d.len() / 2]
        };
        passed &= rep.verdict.passed;
        parts.push(format!("{name} {good}/10 (median dev {:.1}%)", 100.0 * med));
        m.insert(format!("{name}_good"), good as f64);
        m.insert(format!("{name}_median_dev"), med);
    }
    Ok(CriterionOutcome::new(8, passed, parts.join(", "), m))
}

fn ldp() -> Result<CriterionOutcome> {
    let fold = run_ldp_validation(1.0 / 3.0, -1.0, 1.0, &[])?;
    let stretch = run_ldp_validation(0.6, 0.0, 1.0, &[])?;
    let ball = run_ldp_validation(1.0, 0.0, 0.5, &[])?;
    let passed = fold.passes(0.03) && stretch.passes(0.10) && ball.passes(0.05);
    Ok(CriterionOutcome::new(
        9,
        passed,
        format!(
            "folding {:.4} vs {:.4} ({:.2}%), stretching {:.4} vs 0.5 ({:.2}%), ballistic {:.5} vs {:.5} ({:.2}%)",
            fold.extrapolation.limit,
            fold.target,
            100.0 * fold.rel_error,
            stretch.extrapolation.limit,
            100.0 * stretch.rel_error,
            ball.extrapolation.limit,
            kappa(0.5)?,
            100.0 * ball.rel_error
        ),
        metrics([("folding_rel", fold.rel_error), ("stretching_rel", stretch.rel_error), ("ballistic_rel", ball.rel_error)]),
    ))
}

fn distributional() -> Result<CriterionOutcome> {
    let r3 = run_distributional(Variant::R3, 1.0, 1.0, 2000, 8192)?;
    let r4 = run_distributional(Variant::R4, 1.0, 1.0, 2000, 4096)?;
    Ok(CriterionOutcome::new(
        10,
        r3.ks <= 0.05 && r4.ks <= 0.05,
        format!("KS vs {} {:.4}; KS vs {} {:.4}", r3.reference, r3.ks, r4.reference, r4.ks),
        metrics([("ks_r3", r3.ks), ("ks_r4", r4.ks), ("unconverged_r4", r4.unconverged as f64)]),
    ))
}

fn tail() -> Result<CriterionOutcome> {
    let rep = run_tail_check(1.5, 1.0, &[1], &[10.0], &[10.0, 20.0, 40.0, 80.0], 100_000)?;
    let grid = run_tail_check(1.5, 1.0, &[8, 32, 128], &[10.0, 40.0, 160.0], &[10.0, 20.0, 40.0], 20_000)?;
    let slope = rep.slope.theta;
    let (cmin, cmax) = grid.rows.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r.constant), hi.max(r.constant)));
    let passed = (slope + 1.5).abs() <= 0.15 && cmax <= 10.0;
    Ok(CriterionOutcome::new(
        11,
        passed,
        format!("slope {slope:.3} (stderr {:.3}); P T^alpha / ell in [{cmin:.2}, {cmax:.2}] over 9 (ell, T)", rep.slope.stderr),
        metrics([("slope", slope), ("c_min", cmin), ("c_max", cmax)]),
    ))
}

const GRID_SIDE: usize = 317;

fn grid_coord(i: usize, offset: f64) -> f64 {
    -3.0 + 6.0 * (i as f64 + offset) / GRID_SIDE as f64
}

/// Partition and continuity scan of one diagram.
pub fn scan_diagram(diagram: Diagram) -> (usize, usize, usize, f64) {
    let sign = diagram_sign(diagram);
    let alpha = diagram_alphas(diagram)[0];
    let (og, oz) = ((5f64.sqrt() - 1.0) / 2.0, std::f64::consts::FRAC_1_SQRT_2);
    let (mut off, mut bad, mut on) = (0, 0, 0);
    for i in 0..GRID_SIDE {
        for j in 0..GRID_SIDE {
            let (g, z) = (grid_coord(i, og), grid_coord(j, oz));
            match classify_region(alpha, Exponent::Value(g), Exponent::Value(z), sign, true) {
                Ok(label) if matches!(label.region, Region::OtherBoundary(_) | Region::BoundaryRt4Rt5) => on += 1,
                Ok(label) => {
                    off += 1;
                    if accepting_regions(alpha, g, z, sign) != vec![label.region] {
                        bad += 1;
                    }
                }
                Err(_) => bad += 1,
            }
        }
    }
    let mut worst = 0.0f64;
    for seg in boundary_segments().into_iter().filter(|s| s.diagram == diagram && s.continuous) {
        for &a in diagram_alphas(diagram) {
            for k in 0..=20 {
                let (g, z) = (seg.point)(a, k as f64 / 20.0);
                let l = region_exponents(&seg.left, a, g, z).map(|e| e.0).unwrap_or(f64::NAN);
                let r = region_exponents(&seg.right, a, g, z).map(|e| e.0).unwrap_or(f64::NAN);
                let d = (l - r).abs();
                worst = if d.is_nan() { f64::INFINITY } else { worst.max(d) };
            }
        }
    }
    (off, bad, on, worst)
}

fn classifier_partition() -> Result<CriterionOutcome> {
    let (mut bad_total, mut worst) = (0, 0.0f64);
    let mut parts = Vec::new();
    let mut m = BTreeMap::new();
    for d in Diagram::ALL {
        let (off, bad, on, w) = scan_diagram(d);
        bad_total += bad;
        worst = worst.max(w);
        parts.push(format!("{d:?} {off} off/{on} on/{bad} bad"));
        m.insert(format!("{d:?}_bad"), bad as f64);
    }
    m.insert("max_xi_jump".into(), worst);
    Ok(CriterionOutcome::new(
        12,
        bad_total == 0 && worst <= 1e-12,
        format!("{}; max continuous-boundary xi jump {worst:.1e}", parts.join(", ")),
        m,
    ))
}
