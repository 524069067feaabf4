//! Variational problems on the lattice `{k/n}` of a coupled path, and the
//! deterministic limits.
//!
//! A pair `(u, v) = (-a/n, b/n)` is addressed by its lattice indices `(a, b)`.
//! The increment `X_v - X_u` is `plus[b] - minus[a]`, where `minus[0]` is the
//! left limit `X_{0-}`; for a coupled path this makes the increment the scaled
//! sum of the disorder over `[-a, b]`, exactly as in the Gibbs weight.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{path_scale, Environment};
use crate::rates::{LimitDescriptor, Region, RegionLabel};
use crate::{Error, Result};

/// Two functional values closer than this are ties.
pub const TIE_TOL: f64 = 1e-9;

/// Largest window tried by the adaptive search.
pub const DEFAULT_WINDOW_CAP: f64 = 64.0;

const FIRST_WINDOW: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// `beta (X_v - X_u) - I(u, v)`
    R2,
    /// `beta (X_v - X_u)` on `|u| ^ v + v - u <= 1`
    R3,
    /// `beta (X_v - X_u) - h (v - u)`
    R4,
}

/// Where path values come from.
#[derive(Clone, Copy)]
pub enum PathSource<'a> {
    /// `X^{(n)}` built from the environment's partial sums.
    Coupled { env: &'a Environment, resolution: f64 },
    /// A deterministic path `t -> f(t)` sampled on the lattice.
    Function { resolution: f64, f: &'a (dyn Fn(f64) -> f64 + Sync) },
}

impl std::fmt::Debug for PathSource<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PathSource::Coupled { resolution, .. } => write!(f, "Coupled(n={resolution})"),
            PathSource::Function { resolution, .. } => write!(f, "Function(n={resolution})"),
        }
    }
}

impl PathSource<'_> {
    pub fn resolution(&self) -> f64 {
        match self {
            PathSource::Coupled { resolution, .. } | PathSource::Function { resolution, .. } => *resolution,
        }
    }

    fn alpha(&self) -> Option<f64> {
        match self {
            PathSource::Coupled { env, .. } => Some(env.alpha()),
            PathSource::Function { .. } => None,
        }
    }
}

/// Path values on `{k/n : |k| <= K}`, `K = ceil(A n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGrid {
    resolution: f64,
    window: f64,
    plus: Vec<f64>,
    minus: Vec<f64>,
}

impl PathGrid {
    pub fn new(source: PathSource<'_>, window: f64) -> Result<Self> {
        let n = source.resolution();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::param(format!("resolution must be positive, got {n}")));
        }
        if !(window > 0.0 && window.is_finite()) {
            return Err(Error::param(format!("window must be positive, got {window}")));
        }
        let k = (window * n).ceil() as usize;
        let (plus, minus) = match source {
            PathSource::Coupled { env, .. } => {
                let scale = path_scale(n, env.alpha());
                let sums = env.partial_sums(k);
                (
                    sums.plus.iter().map(|&s| scale * s).collect(),
                    sums.minus.iter().map(|&s| -scale * s).collect(),
                )
            }
            PathSource::Function { f, .. } => {
                ((0..=k).map(|i| f(i as f64 / n)).collect(), (0..=k).map(|i| f(-(i as f64) / n)).collect())
            }
        };
        Ok(PathGrid { resolution: n, window, plus, minus })
    }

    /// Builds a grid from explicit values; `minus[0]` is the left limit at 0.
    pub fn from_values(resolution: f64, plus: Vec<f64>, minus: Vec<f64>) -> Result<Self> {
        if plus.len() != minus.len() || plus.is_empty() {
            return Err(Error::param("plus and minus must be non-empty and of equal length"));
        }
        let window = (plus.len() - 1) as f64 / resolution;
        Ok(PathGrid { resolution, window, plus, minus })
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    /// Largest lattice index `K`.
    pub fn k_max(&self) -> usize {
        self.plus.len() - 1
    }

    /// `X_{k/n}` for `k >= 0`.
    pub fn plus(&self) -> &[f64] {
        &self.plus
    }

    /// `X_{-k/n}` for `k >= 1`, and `X_{0-}` at `k = 0`.
    pub fn minus(&self) -> &[f64] {
        &self.minus
    }

    #[inline]
    pub fn increment(&self, a: usize, b: usize) -> f64 {
        self.plus[b] - self.minus[a]
    }

    pub fn u(&self, a: usize) -> f64 {
        -(a as f64) / self.resolution
    }

    pub fn v(&self, b: usize) -> f64 {
        b as f64 / self.resolution
    }

    /// Whether `(a, b)` satisfies the width constraint `|u| ^ v + v - u <= 1`.
    #[inline]
    pub fn r3_feasible(&self, a: usize, b: usize) -> bool {
        (a.min(b) + a + b) as f64 <= self.resolution + 1e-9
    }
}

/// The functional of a variant at a lattice pair; `-inf` off the constraint set.
#[inline]
pub fn functional(grid: &PathGrid, variant: Variant, beta_hat: f64, h_hat: f64, a: usize, b: usize) -> f64 {
    let inc = beta_hat * grid.increment(a, b);
    let n = grid.resolution;
    match variant {
        Variant::R2 => {
            let s = (a.min(b) + a + b) as f64 / n;
            inc - 0.5 * s * s
        }
        Variant::R3 => {
            if grid.r3_feasible(a, b) {
                inc
            } else {
                f64::NEG_INFINITY
            }
        }
        Variant::R4 => inc - h_hat * (a + b) as f64 / n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticePair {
    pub a: usize,
    pub b: usize,
    pub u: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalResult {
    pub value: f64,
    /// Pairs attaining `value` within [`TIE_TOL`], in lexicographic `(a, b)` order.
    pub maximizers: Vec<LatticePair>,
    pub window: f64,
    pub resolution: f64,
    pub variant: Variant,
    /// The adaptive search reached its cap without the outer shell falling
    /// below `value - 1`.
    pub unconverged: bool,
    /// A maximizer sits on the edge of the window.
    pub boundary_maximizer: bool,
}

struct Scan {
    value: f64,
    maximizers: Vec<(usize, usize)>,
    shell_best: f64,
}

fn check_inputs(variant: Variant, beta_hat: f64, h_hat: f64) -> Result<()> {
    if !(beta_hat >= 0.0 && beta_hat.is_finite()) {
        return Err(Error::param(format!("beta_hat must be finite and >= 0, got {beta_hat}")));
    }
    if variant == Variant::R4 && !(h_hat > 0.0 && h_hat.is_finite()) {
        return Err(Error::param(format!("the linear-penalty problem needs h_hat > 0, got {h_hat}")));
    }
    Ok(())
}

/// Exhaustive scan of the window; cells with both indices `<= inner` are not
/// counted in `shell_best`.
fn scan(grid: &PathGrid, variant: Variant, beta_hat: f64, h_hat: f64, inner: usize) -> Scan {
    if variant == Variant::R4 {
        return scan_separable(grid, beta_hat, h_hat, inner);
    }
    let k = grid.k_max();
    let n = grid.resolution;
    let pmax = grid.plus.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let rows: Vec<(f64, Vec<(usize, f64)>, f64)> = (0..=k)
        .into_par_iter()
        .map(|a| {
            let mut best = f64::NEG_INFINITY;
            let mut cands: Vec<(usize, f64)> = Vec::new();
            let mut shell = f64::NEG_INFINITY;
            let bound = beta_hat * (pmax - grid.minus[a]);
            for b in 0..=k {
                if variant == Variant::R3 && !grid.r3_feasible(a, b) {
                    break;
                }
                if variant == Variant::R2 {
                    let s = (a.min(b) + a + b) as f64 / n;
                    // the penalty only grows with b
                    if bound - 0.5 * s * s < best - 1.0 - TIE_TOL {
                        break;
                    }
                }
                let f = functional(grid, variant, beta_hat, h_hat, a, b);
                if a > inner || b > inner {
                    shell = shell.max(f);
                }
                if f > best {
                    best = f;
                    cands.retain(|&(_, g)| g >= best - TIE_TOL);
                }
                if f >= best - TIE_TOL {
                    cands.push((b, f));
                }
            }
            (best, cands, shell)
        })
        .collect();
    let value = rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let shell_best = rows.iter().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max);
    let mut maximizers = Vec::new();
    for (a, (_, cands, _)) in rows.iter().enumerate() {
        for &(b, f) in cands {
            if f >= value - TIE_TOL {
                maximizers.push((a, b));
            }
        }
    }
    Scan { value, maximizers, shell_best }
}

fn scan_separable(grid: &PathGrid, beta_hat: f64, h_hat: f64, inner: usize) -> Scan {
    let n = grid.resolution;
    let left: Vec<f64> = grid.minus.iter().enumerate().map(|(a, &m)| -beta_hat * m - h_hat * a as f64 / n).collect();
    let right: Vec<f64> = grid.plus.iter().enumerate().map(|(b, &p)| beta_hat * p - h_hat * b as f64 / n).collect();
    let max_of = |x: &[f64]| x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lmax, rmax) = (max_of(&left), max_of(&right));
    let value = lmax + rmax;
    let near = |x: &[f64], m: f64| -> Vec<usize> { (0..x.len()).filter(|&i| x[i] >= m - TIE_TOL).collect() };
    let (la, rb) = (near(&left, lmax), near(&right, rmax));
    let mut maximizers = Vec::new();
    for &a in &la {
        for &b in &rb {
            if grid.increment(a, b) * beta_hat - h_hat * (a + b) as f64 / n >= value - TIE_TOL {
                maximizers.push((a, b));
            }
        }
    }
    let tail = |x: &[f64]| if inner + 1 < x.len() { max_of(&x[inner + 1..]) } else { f64::NEG_INFINITY };
    let shell_best = (tail(&left) + rmax).max(lmax + tail(&right));
    Scan { value, maximizers, shell_best }
}

fn finish(grid: &PathGrid, variant: Variant, s: Scan, unconverged: bool) -> VariationalResult {
    let k = grid.k_max();
    let maximizers: Vec<LatticePair> =
        s.maximizers.iter().map(|&(a, b)| LatticePair { a, b, u: grid.u(a), v: grid.v(b) }).collect();
    let boundary_maximizer = variant != Variant::R3 && maximizers.iter().any(|p| p.a == k || p.b == k);
    VariationalResult {
        value: s.value,
        maximizers,
        window: grid.window,
        resolution: grid.resolution,
        variant,
        unconverged,
        boundary_maximizer,
    }
}

/// Maximum of a variant's functional over every lattice pair of `grid`.
pub fn solve_on_grid(grid: &PathGrid, variant: Variant, beta_hat: f64, h_hat: f64) -> Result<VariationalResult> {
    check_inputs(variant, beta_hat, h_hat)?;
    let s = scan(grid, variant, beta_hat, h_hat, grid.k_max());
    Ok(finish(grid, variant, s, false))
}

pub fn solve_r2(grid: &PathGrid, beta_hat: f64) -> Result<VariationalResult> {
    solve_on_grid(grid, Variant::R2, beta_hat, 0.0)
}

pub fn solve_r3(grid: &PathGrid, beta_hat: f64) -> Result<VariationalResult> {
    solve_on_grid(grid, Variant::R3, beta_hat, 0.0)
}

pub fn solve_r4(grid: &PathGrid, beta_hat: f64, h_hat: f64) -> Result<VariationalResult> {
    solve_on_grid(grid, Variant::R4, beta_hat, h_hat)
}

/// Doubles the window from 4 until the best value on the outer shell
/// `[A/2, A]` is below `max - 1`, or `cap` is passed. The width-constrained
/// problem lives in the unit window and is solved there directly.
pub fn solve_adaptive(
    source: PathSource<'_>,
    variant: Variant,
    beta_hat: f64,
    h_hat: f64,
    cap: f64,
) -> Result<VariationalResult> {
    check_inputs(variant, beta_hat, h_hat)?;
    if variant == Variant::R4 {
        if let Some(alpha) = source.alpha() {
            if alpha <= 1.0 {
                return Err(Error::param(format!(
                    "the linear-penalty functional is a.s. infinite for alpha <= 1 (alpha={alpha})"
                )));
            }
        }
    }
    if variant == Variant::R3 {
        let grid = PathGrid::new(source, 1.0)?;
        return solve_on_grid(&grid, variant, beta_hat, h_hat);
    }
    let mut window = FIRST_WINDOW.min(cap);
    loop {
        let grid = PathGrid::new(source, window)?;
        let inner = ((window / 2.0) * grid.resolution).floor() as usize;
        let s = scan(&grid, variant, beta_hat, h_hat, inner);
        let converged = s.shell_best < s.value - 1.0;
        if converged || window * 2.0 > cap {
            return Ok(finish(&grid, variant, s, !converged));
        }
        window *= 2.0;
    }
}

/// The window the adaptive search settles on, and whether it converged.
pub fn adaptive_window(source: PathSource<'_>, variant: Variant, beta_hat: f64, h_hat: f64) -> Result<(f64, bool)> {
    let r = solve_adaptive(source, variant, beta_hat, h_hat, DEFAULT_WINDOW_CAP)?;
    Ok((r.window, !r.unconverged))
}

/// Lattice pairs within Chebyshev distance `floor(eps n)` of a maximizer, i.e.
/// whose `eps`-neighbourhood attains the maximum.
pub fn quasi_maximizers(grid: &PathGrid, result: &VariationalResult, eps: f64) -> BTreeSet<(usize, usize)> {
    let r = (eps * grid.resolution + 1e-9).floor().max(0.0) as usize;
    let k = grid.k_max();
    let mut out = BTreeSet::new();
    for p in &result.maximizers {
        for a in p.a.saturating_sub(r)..=(p.a + r).min(k) {
            for b in p.b.saturating_sub(r)..=(p.b + r).min(k) {
                if result.variant == Variant::R3 && !grid.r3_feasible(a, b) {
                    continue;
                }
                out.insert((a, b));
            }
        }
    }
    out
}

/// Best value of the one-sided problem (`u = 0`), using the increment
/// `X_v - X_0` so that the path starts at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneSided {
    pub value: f64,
    pub argmax: f64,
    pub window: f64,
    pub unconverged: bool,
}

fn one_sided_scan(grid: &PathGrid, variant: Variant, beta_hat: f64, h_hat: f64, inner: usize) -> (f64, usize, f64) {
    let n = grid.resolution;
    let x0 = grid.plus[0];
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    let mut shell = f64::NEG_INFINITY;
    for (b, &p) in grid.plus.iter().enumerate() {
        let v = b as f64 / n;
        let inc = beta_hat * (p - x0);
        let f = match variant {
            Variant::R2 => inc - 0.5 * v * v,
            Variant::R3 => {
                if v > 1.0 + 1e-12 {
                    break;
                }
                inc
            }
            Variant::R4 => inc - h_hat * v,
        };
        if f > best {
            best = f;
            arg = b;
        }
        if b > inner {
            shell = shell.max(f);
        }
    }
    (best, arg, shell)
}

/// `sup_{v >= 0}` of the one-sided functional with an adaptive window.
pub fn solve_one_sided(source: PathSource<'_>, variant: Variant, beta_hat: f64, h_hat: f64, cap: f64) -> Result<OneSided> {
    check_inputs(variant, beta_hat, h_hat)?;
    if variant == Variant::R3 {
        let grid = PathGrid::new(source, 1.0)?;
        let (value, arg, _) = one_sided_scan(&grid, variant, beta_hat, h_hat, grid.k_max());
        return Ok(OneSided { value, argmax: grid.v(arg), window: 1.0, unconverged: false });
    }
    let mut window = FIRST_WINDOW.min(cap);
    loop {
        let grid = PathGrid::new(source, window)?;
        let inner = ((window / 2.0) * grid.resolution).floor() as usize;
        let (value, arg, shell) = one_sided_scan(&grid, variant, beta_hat, h_hat, inner);
        let converged = shell < value - 1.0;
        if converged || window * 2.0 > cap {
            return Ok(OneSided { value, argmax: grid.v(arg), window, unconverged: !converged });
        }
        window *= 2.0;
    }
}

/// A deterministic limit and where it is attained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub value: f64,
    /// Limiting rescaled range width.
    pub width: Option<f64>,
    /// Limiting rescaled extremes `(u, v)`.
    pub maximizers: Vec<(f64, f64)>,
    /// Limiting `|S_N| / N`.
    pub velocity: Option<f64>,
}

/// The constant that the normalized `log Z` converges to in regions with a
/// deterministic limit.
/// None of these constants depends on `beta_hat`; it is accepted for symmetry
/// with the random-limit solvers.
pub fn closed_form_limit(label: &RegionLabel, _beta_hat: f64, h_hat: f64) -> Result<ClosedForm> {
    let plain = |value: f64| ClosedForm { value, width: None, maximizers: Vec::new(), velocity: None };
    let hab = h_hat.abs();
    let Some(limit) = label.limit else {
        return Err(Error::Unclassifiable(format!("{} has no proven limit", label.region)));
    };
    match limit {
        LimitDescriptor::Unity => Ok(plain(0.0)),
        LimitDescriptor::Folding => {
            if h_hat <= 0.0 {
                return Err(Error::param("the folding limit needs h_hat > 0"));
            }
            let pi = std::f64::consts::PI;
            Ok(ClosedForm {
                value: -1.5 * (h_hat * pi).powf(2.0 / 3.0),
                width: Some(pi.powf(2.0 / 3.0) * h_hat.powf(-1.0 / 3.0)),
                maximizers: Vec::new(),
                velocity: None,
            })
        }
        LimitDescriptor::MinusTwoH => Ok(plain(-2.0 * h_hat)),
        LimitDescriptor::HalfHSquared => Ok(ClosedForm {
            value: 0.5 * h_hat * h_hat,
            width: Some(hab),
            maximizers: vec![(0.0, hab), (-hab, 0.0)],
            velocity: None,
        }),
        LimitDescriptor::BoundaryConstant => {
            let e = (2.0 * hab).exp_m1();
            Ok(ClosedForm {
                value: (e / 2.0).ln() - hab,
                width: None,
                maximizers: Vec::new(),
                velocity: Some(hab.tanh()),
            })
        }
        LimitDescriptor::AbsH => Ok(plain(hab)),
        LimitDescriptor::WR2 | LimitDescriptor::WR3 | LimitDescriptor::WR4 => {
            Err(Error::RandomLimit(label.region.to_string()))
        }
    }
}

/// Variant solved for a region with a random limit.
pub fn variant_of(region: &Region) -> Option<Variant> {
    match region {
        Region::R2 => Some(Variant::R2),
        Region::R3 => Some(Variant::R3),
        Region::R4 => Some(Variant::R4),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::{classify_region, Exponent, HSign};

    fn linear(n: f64, window: f64) -> PathGrid {
        let f = |t: f64| t;
        PathGrid::new(PathSource::Function { resolution: n, f: &f }, window).unwrap()
    }

    fn zero(n: f64, window: f64) -> PathGrid {
        let f = |_: f64| 0.0;
        PathGrid::new(PathSource::Function { resolution: n, f: &f }, window).unwrap()
    }

    #[test]
    fn flat_path() {
        for v in [Variant::R2, Variant::R3] {
            let r = solve_on_grid(&zero(10.0, 2.0), v, 1.0, 0.0).unwrap();
            assert_eq!(r.value, 0.0);
            if v == Variant::R2 {
                assert_eq!(r.maximizers.len(), 1);
                assert_eq!((r.maximizers[0].a, r.maximizers[0].b), (0, 0));
            }
        }
    }

    #[test]
    fn linear_path_examples() {
        let g = linear(10.0, 2.0);
        let r = solve_r2(&g, 1.0).unwrap();
        assert!((r.value - 0.5).abs() < 1e-12);
        let pairs: Vec<(usize, usize)> = r.maximizers.iter().map(|p| (p.a, p.b)).collect();
        assert_eq!(pairs, vec![(0, 10), (10, 0)]);
        let r = solve_r3(&g, 1.0).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let pairs: Vec<(usize, usize)> = r.maximizers.iter().map(|p| (p.a, p.b)).collect();
        assert_eq!(pairs, vec![(0, 10), (10, 0)]);
        let r = solve_r4(&g, 1.0, 2.0).unwrap();
        assert_eq!(r.value, 0.0);
        let r = solve_r4(&g, 2.0, 1.0).unwrap();
        assert!((r.value - 4.0).abs() < 1e-12);
        assert!(r.boundary_maximizer);
    }

    #[test]
    fn adaptive_examples() {
        let z = |_: f64| 0.0;
        let src = PathSource::Function { resolution: 8.0, f: &z };
        let r = solve_adaptive(src, Variant::R2, 1.0, 0.0, 64.0).unwrap();
        assert_eq!(r.window, 4.0);
        assert!(!r.unconverged);
        let t = |t: f64| t;
        let src = PathSource::Function { resolution: 8.0, f: &t };
        let r = solve_adaptive(src, Variant::R4, 1.0, 2.0, 64.0).unwrap();
        assert_eq!(r.window, 4.0);
        assert!(!r.unconverged);
        let r = solve_adaptive(src, Variant::R4, 2.0, 1.0, 64.0).unwrap();
        assert!(r.unconverged);
        assert!(r.boundary_maximizer);
        assert_eq!(r.window, 64.0);
    }

    #[test]
    fn quasi_maximizer_nesting() {
        let g = linear(10.0, 2.0);
        let r = solve_r2(&g, 1.0).unwrap();
        let small = quasi_maximizers(&g, &r, 0.1);
        let big = quasi_maximizers(&g, &r, 0.3);
        assert!(small.is_subset(&big));
        for b in 7..=13 {
            assert!(big.contains(&(0, b)));
            assert!(big.contains(&(b, 0)));
        }
        assert!(!big.contains(&(0, 14)));
    }

    #[test]
    fn closed_forms() {
        let lab = |g: f64, z: f64, s: HSign| classify_region(2.0, Exponent::Value(g), Exponent::Value(z), s, true).unwrap();
        let c = closed_form_limit(&lab(0.2, 0.0, HSign::Positive), 1.0, 1.0).unwrap();
        assert!((c.value + 3.217_544_095_666_538).abs() < 1e-12);
        assert!((c.width.unwrap() - 2.145_029_4).abs() < 1e-7);
        let c = closed_form_limit(&lab(0.6, 0.25, HSign::Negative), 1.0, -1.0).unwrap();
        assert_eq!(c.value, 0.5);
        assert_eq!(c.maximizers, vec![(0.0, 1.0), (-1.0, 0.0)]);
        let c = closed_form_limit(&lab(0.5, 0.0, HSign::Negative), 1.0, -1.0).unwrap();
        assert!((c.value - 0.161_439_4).abs() < 1e-7);
        assert!((c.velocity.unwrap() - 0.761_594_2).abs() < 1e-7);
        let c = closed_form_limit(&lab(0.0, -2.0, HSign::Positive), 1.0, 1.0).unwrap();
        assert_eq!(c.value, -2.0);
        assert!(matches!(closed_form_limit(&lab(0.0, 10.0, HSign::Positive), 1.0, 1.0), Err(Error::RandomLimit(_))));
    }
}
