//! Partition functions and polymer marginals.
//!
//! The Gibbs weight of a path is `exp(beta_N (Omega^+_b + Omega^-_a) - h_N (a+b+1))`
//! where `-a` and `b` are its extremes, so it factorises as
//! `exp(u(a) + v(b))` with `u(a) = beta_N Omega^-_a - h_N a` and
//! `v(b) = beta_N Omega^+_b - h_N (b+1)`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{validate_alpha, Environment};
use crate::logspace::{LogProb, LogSumExp};
use crate::rates::{classify_region, HSign, RegionLabel};
use crate::srw_exact::{RangeEngine, RangeLaw};
use crate::{Error, Result};

pub use crate::rates::Exponent;

/// Relative size of the neglected part of `Z` accepted by the automatic window.
pub const WINDOW_REL_TOL: f64 = 1e-10;

/// Largest walk length the path-enumeration oracle accepts.
pub const ORACLE_MAX_N: usize = 20;

/// Rows per work unit when accumulating endpoint vectors.
const ENDPOINT_CHUNK_ROWS: usize = 8;

/// Above this many cells the endpoint marginal first tries the spectral
/// by-parts route.
const BY_PARTS_MIN_CELLS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolymerParams {
    pub alpha: f64,
    pub beta_hat: f64,
    pub h_hat: f64,
    pub gamma: Exponent,
    pub zeta: Exponent,
    #[serde(rename = "N", alias = "n")]
    pub n: usize,
}

impl PolymerParams {
    pub fn new(alpha: f64, beta_hat: f64, h_hat: f64, gamma: Exponent, zeta: Exponent, n: usize) -> Result<Self> {
        let p = PolymerParams { alpha, beta_hat, h_hat, gamma, zeta, n };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        validate_alpha(self.alpha)?;
        if !(self.beta_hat >= 0.0 && self.beta_hat.is_finite()) {
            return Err(Error::param(format!("beta_hat must be finite and >= 0, got {}", self.beta_hat)));
        }
        if !self.h_hat.is_finite() {
            return Err(Error::param(format!("h_hat must be finite, got {}", self.h_hat)));
        }
        for (name, e) in [("gamma", self.gamma), ("zeta", self.zeta)] {
            if let Exponent::Value(v) = e {
                if !v.is_finite() {
                    return Err(Error::param(format!("{name} must be finite or inf, got {v}")));
                }
            }
        }
        if self.n == 0 {
            return Err(Error::param("N must be positive"));
        }
        Ok(())
    }

    /// The same couplings at another polymer length.
    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    /// `beta_hat * N^{-gamma}`, zero when gamma is disabled.
    pub fn beta_n(&self) -> f64 {
        if self.beta_hat == 0.0 {
            0.0
        } else {
            self.beta_hat * self.gamma.decay(self.n)
        }
    }

    /// `h_hat * N^{-zeta}`, zero when zeta is disabled.
    pub fn h_n(&self) -> f64 {
        if self.h_hat == 0.0 {
            0.0
        } else {
            self.h_hat * self.zeta.decay(self.n)
        }
    }

    pub fn classify(&self) -> Result<RegionLabel> {
        classify_region(
            self.alpha,
            self.gamma,
            self.zeta,
            HSign::of(self.h_hat),
            self.beta_hat > 0.0 && !self.gamma.is_disabled(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Window {
    /// Grow geometrically until the neglected part is below [`WINDOW_REL_TOL`].
    Auto,
    Fixed { a_max: usize, b_max: usize },
}

/// `log Z` together with the window that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub log_z: f64,
    pub a_max: usize,
    pub b_max: usize,
    /// `ln` of an upper bound on the contribution of cells outside the window.
    pub log_neglected: f64,
    /// The window contains every reachable cell.
    pub exact: bool,
}

impl Partition {
    /// Neglected contribution relative to `Z`.
    pub fn relative_neglected(&self) -> f64 {
        (self.log_neglected - self.log_z).exp()
    }
}

/// Polymer probabilities of the extremes `(-M^-, M^+) = (a, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolymerRangeMarginal {
    pub log_z: f64,
    /// `rows[a][b] = ln P_N(M^- = -a, M^+ = b)`.
    pub rows: Vec<Vec<f64>>,
    /// Upper bound on the polymer mass outside the window.
    pub neglected: f64,
}

impl PolymerRangeMarginal {
    pub fn log_prob(&self, a: usize, b: usize) -> LogProb {
        match self.rows.get(a).and_then(|r| r.get(b)) {
            Some(&v) => LogProb(v),
            None => LogProb::ZERO,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, LogProb)> + '_ {
        self.rows.iter().enumerate().flat_map(|(a, r)| r.iter().enumerate().map(move |(b, &v)| (a, b, LogProb(v))))
    }

    pub fn total(&self) -> f64 {
        let mut acc = LogSumExp::new();
        self.iter().for_each(|(_, _, p)| acc.push(p.ln()));
        acc.value().exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndpointMethod {
    /// Exact per-cell endpoint laws.
    Cellwise,
    /// Summation by parts against the spectral confined laws.
    ByParts,
}

/// Polymer law of the endpoint `S_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointMarginal {
    pub n: usize,
    /// `pmf[x + N] = P_N(S_N = x)`.
    pub pmf: Vec<f64>,
    /// Upper bound on the polymer mass left out.
    pub neglected: f64,
    pub method: EndpointMethod,
}

impl EndpointMarginal {
    pub fn prob(&self, x: i64) -> f64 {
        let i = x + self.n as i64;
        if i < 0 {
            return 0.0;
        }
        self.pmf.get(i as usize).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.pmf.iter().sum()
    }

    /// `P(S_N <= x)`.
    pub fn cdf(&self, x: i64) -> f64 {
        let n = self.n as i64;
        (-n..=x.min(n)).map(|y| self.prob(y)).sum()
    }
}

/// Log-weights `u(a)`, `v(b)` for `a, b <= N`.
#[derive(Debug, Clone)]
struct Weights {
    u: Vec<f64>,
    v: Vec<f64>,
}

impl Weights {
    fn new(env: &Environment, params: &PolymerParams) -> Result<Self> {
        let n = params.n;
        let beta = params.beta_n();
        let h = params.h_n();
        let sums = env.partial_sums(n);
        let mut u = Vec::with_capacity(n + 1);
        let mut v = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let (om, op) = if beta == 0.0 { (0.0, 0.0) } else { (beta * sums.minus[j], beta * sums.plus[j]) };
            let uj = om - h * j as f64;
            let vj = op - h * (j + 1) as f64;
            if !uj.is_finite() {
                return Err(Error::NonFiniteWeight { a: j, b: 0 });
            }
            if !vj.is_finite() {
                return Err(Error::NonFiniteWeight { a: 0, b: j });
            }
            u.push(uj);
            v.push(vj);
        }
        Ok(Weights { u, v })
    }

    #[inline]
    fn cell(&self, a: usize, b: usize) -> Result<f64> {
        let w = self.u[a] + self.v[b];
        if w.is_finite() {
            Ok(w)
        } else {
            Err(Error::NonFiniteWeight { a, b })
        }
    }
}

/// `ln` of `P(M^- = -a, M^+ = b)` rows for a window, borrowed from a law that
/// may be larger than the window.
struct WindowView<'a> {
    law: &'a RangeLaw,
    a_max: usize,
    b_max: usize,
}

impl WindowView<'_> {
    fn row(&self, a: usize) -> &[f64] {
        let r = self.law.row(a);
        &r[..r.len().min(self.b_max + 1)]
    }
}

fn shell_edge(base: usize, k: u32) -> usize {
    if base == 0 {
        (1usize << k.min(62)) - 1
    } else {
        base.saturating_mul(1usize << k.min(62))
    }
}

/// Upper bound (in `ln`) on the weight carried by cells outside
/// `[0, a_max] x [0, b_max]`, by dyadic shells: a cell in level `k` has both
/// coordinates below the `k`-th edge and at least one above the previous one.
fn log_outside_bound(engine: &RangeEngine, w: &Weights, a_max: usize, b_max: usize) -> f64 {
    let n = engine.n();
    if a_max >= n && b_max >= n {
        return f64::NEG_INFINITY;
    }
    let prefix = |x: &[f64]| -> Vec<f64> {
        let mut m = f64::NEG_INFINITY;
        x.iter().map(|&v| {
            m = m.max(v);
            m
        })
        .collect()
    };
    let pu = prefix(&w.u);
    let pv = prefix(&w.v);
    let span_max = |x: &[f64], lo: usize, hi: usize| x[lo..=hi].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tables = engine.tables();
    let mut acc = LogSumExp::new();
    let mut k = 1u32;
    loop {
        let (a_lo, b_lo) = (shell_edge(a_max, k - 1), shell_edge(b_max, k - 1));
        if a_lo >= n && b_lo >= n {
            break;
        }
        let a_hi = shell_edge(a_max, k).min(n);
        let b_hi = shell_edge(b_max, k).min(n);
        if a_lo < n {
            acc.push(span_max(&w.u, a_lo + 1, a_hi) + pv[b_hi] + tables.log_max_tail(a_lo as i64 + 1));
        }
        if b_lo < n {
            acc.push(pu[a_hi] + span_max(&w.v, b_lo + 1, b_hi) + tables.log_max_tail(b_lo as i64 + 1));
        }
        k += 1;
    }
    acc.value()
}

/// Holds the extreme-value laws so that many environments can share them.
#[derive(Default)]
pub struct PolymerEngine {
    engines: Mutex<HashMap<usize, Arc<RangeEngine>>>,
    laws: Mutex<HashMap<usize, Arc<RangeLaw>>>,
}

impl std::fmt::Debug for PolymerEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PolymerEngine").finish_non_exhaustive()
    }
}

impl PolymerEngine {
    pub fn new() -> Self {
        Self::default()
    }

    /// Drops every cached law.
    pub fn clear(&self) {
        self.engines.lock().expect("engine cache poisoned").clear();
        self.laws.lock().expect("law cache poisoned").clear();
    }

    pub fn range_engine(&self, n: usize) -> Arc<RangeEngine> {
        let mut map = self.engines.lock().expect("engine cache poisoned");
        map.entry(n).or_insert_with(|| Arc::new(RangeEngine::new(n))).clone()
    }

    /// A law covering at least `[0, a_max] x [0, b_max]`.
    pub fn range_law(&self, n: usize, a_max: usize, b_max: usize) -> Arc<RangeLaw> {
        let (a_max, b_max) = (a_max.min(n), b_max.min(n));
        if let Some(law) = self.laws.lock().expect("law cache poisoned").get(&n) {
            if law.a_max() >= a_max && law.b_max() >= b_max {
                return law.clone();
            }
        }
        let engine = self.range_engine(n);
        let (a_max, b_max) = match self.laws.lock().expect("law cache poisoned").get(&n) {
            Some(old) => (a_max.max(old.a_max()), b_max.max(old.b_max())),
            None => (a_max, b_max),
        };
        let law = Arc::new(RangeLaw::build(engine, a_max, b_max));
        self.laws.lock().expect("law cache poisoned").insert(n, law.clone());
        law
    }

    fn window_log_z(view: &WindowView<'_>, w: &Weights, keep: &(dyn Fn(usize, usize) -> bool + Sync)) -> Result<f64> {
        let rows: Vec<Result<f64>> = (0..=view.a_max)
            .into_par_iter()
            .map(|a| {
                let mut acc = LogSumExp::new();
                for (b, &lp) in view.row(a).iter().enumerate() {
                    if lp == f64::NEG_INFINITY || !keep(a, b) {
                        continue;
                    }
                    acc.push(w.cell(a, b)? + lp);
                }
                Ok(acc.value())
            })
            .collect();
        let mut acc = LogSumExp::new();
        for r in rows {
            acc.push(r?);
        }
        Ok(acc.value())
    }

    fn initial_window(params: &PolymerParams) -> usize {
        let xi = params.classify().ok().and_then(|l| l.xi).unwrap_or(0.5);
        let a0 = (4.0 * (params.n as f64).powf(xi)).ceil();
        (a0 as usize).clamp(1, params.n)
    }

    /// Resolves the window and returns the law and weights used.
    fn resolve(
        &self,
        env: &Environment,
        params: &PolymerParams,
        window: Window,
    ) -> Result<(Partition, Arc<RangeLaw>, Weights)> {
        params.validate()?;
        let n = params.n;
        let w = Weights::new(env, params)?;
        let all = |_: usize, _: usize| true;
        match window {
            Window::Fixed { a_max, b_max } => {
                let (a_max, b_max) = (a_max.min(n), b_max.min(n));
                let law = self.range_law(n, a_max, b_max);
                let view = WindowView { law: &law, a_max, b_max };
                let log_z = Self::window_log_z(&view, &w, &all)?;
                let log_neglected = log_outside_bound(law.engine(), &w, a_max, b_max);
                let exact = a_max >= n && b_max >= n;
                Ok((Partition { log_z, a_max, b_max, log_neglected, exact }, law, w))
            }
            Window::Auto => {
                let mut side = Self::initial_window(params);
                loop {
                    let law = self.range_law(n, side, side);
                    let view = WindowView { law: &law, a_max: side, b_max: side };
                    let log_z = Self::window_log_z(&view, &w, &all)?;
                    let log_neglected = log_outside_bound(law.engine(), &w, side, side);
                    let exact = side >= n;
                    if exact || log_neglected - log_z < WINDOW_REL_TOL.ln() {
                        let part = Partition { log_z, a_max: side, b_max: side, log_neglected, exact };
                        return Ok((part, law, w));
                    }
                    side = (2 * side).min(n);
                }
            }
        }
    }

    pub fn partition(&self, env: &Environment, params: &PolymerParams, window: Window) -> Result<Partition> {
        Ok(self.resolve(env, params, window)?.0)
    }

    pub fn log_partition(&self, env: &Environment, params: &PolymerParams, window: Window) -> Result<f64> {
        Ok(self.partition(env, params, window)?.log_z)
    }

    /// `ln Z` restricted to cells accepted by `keep`, over the window that
    /// [`Window`] resolves to for the unrestricted sum. `-inf` when nothing is kept.
    pub fn log_partition_restricted(
        &self,
        env: &Environment,
        params: &PolymerParams,
        window: Window,
        keep: &(dyn Fn(usize, usize) -> bool + Sync),
    ) -> Result<f64> {
        let (part, law, w) = self.resolve(env, params, window)?;
        let view = WindowView { law: &law, a_max: part.a_max, b_max: part.b_max };
        Self::window_log_z(&view, &w, keep)
    }

    pub fn range_marginal(
        &self,
        env: &Environment,
        params: &PolymerParams,
        window: Window,
    ) -> Result<PolymerRangeMarginal> {
        let (part, law, w) = self.resolve(env, params, window)?;
        let view = WindowView { law: &law, a_max: part.a_max, b_max: part.b_max };
        let rows = (0..=part.a_max)
            .into_par_iter()
            .map(|a| view.row(a).iter().enumerate().map(|(b, &lp)| Ok(w.cell(a, b)? + lp - part.log_z)).collect())
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(PolymerRangeMarginal { log_z: part.log_z, rows, neglected: part.relative_neglected() })
    }

    /// Polymer law of the endpoint. Cells are pruned in order of decreasing
    /// polymer mass once the kept mass reaches `1 - tol`.
    pub fn endpoint_marginal(
        &self,
        env: &Environment,
        params: &PolymerParams,
        window: Window,
        tol: f64,
    ) -> Result<EndpointMarginal> {
        let marg = self.range_marginal(env, params, window)?;
        let n = params.n;
        let engine = self.range_engine(n);
        let cells: usize = marg.rows.iter().map(|r| r.len()).sum();
        if !engine.is_exact() && cells >= BY_PARTS_MIN_CELLS {
            if let Some(e) = by_parts_endpoint(&engine, env, params, &marg, tol)? {
                return Ok(e);
            }
        }
        Ok(cellwise_endpoint(&engine, &marg, tol))
    }
}

fn cellwise_endpoint(engine: &RangeEngine, marg: &PolymerRangeMarginal, tol: f64) -> EndpointMarginal {
    let n = engine.n();
    let mut order: Vec<(f64, usize, usize)> = marg
        .iter()
        .filter(|(_, _, p)| !p.is_zero())
        .map(|(a, b, p)| (p.ln(), a, b))
        .collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    let mut kept_mass = 0.0;
    let mut dropped = LogSumExp::new();
    let mut keep = vec![Vec::new(); marg.rows.len()];
    for &(lp, a, b) in &order {
        if kept_mass >= 1.0 - tol {
            dropped.push(lp);
        } else {
            kept_mass += lp.exp();
            keep[a].push(b);
        }
    }
    let offset = n as i64;
    let chunks: Vec<Vec<f64>> = keep
        .par_chunks(ENDPOINT_CHUNK_ROWS)
        .enumerate()
        .map(|(ci, rows)| {
            let mut acc = vec![0.0; 2 * n + 1];
            for (ri, bs) in rows.iter().enumerate() {
                let a = ci * ENDPOINT_CHUNK_ROWS + ri;
                for &b in bs {
                    let lw = marg.rows[a][b] - engine.log_cell(a, b);
                    let v = engine.cell_endpoint(a, b);
                    let f = (lw + v.log_scale).exp();
                    for (i, &p) in v.values.iter().enumerate() {
                        acc[(v.lo + i as i64 + offset) as usize] += f * p;
                    }
                }
            }
            acc
        })
        .collect();
    let mut pmf = vec![0.0; 2 * n + 1];
    for c in chunks {
        pmf.iter_mut().zip(c).for_each(|(p, v)| *p += v);
    }
    EndpointMarginal { n, pmf, neglected: marg.neglected + dropped.value().exp(), method: EndpointMethod::Cellwise }
}

fn by_parts_endpoint(
    engine: &RangeEngine,
    env: &Environment,
    params: &PolymerParams,
    marg: &PolymerRangeMarginal,
    tol: f64,
) -> Result<Option<EndpointMarginal>> {
    let n = engine.n();
    let a_len = marg.rows.len();
    let b_len = marg.rows.iter().map(|r| r.len()).max().unwrap_or(0);
    let mut mass_a = vec![0.0; a_len];
    let mut mass_b = vec![0.0; b_len];
    for (a, b, p) in marg.iter() {
        let m = p.prob();
        mass_a[a] += m;
        mass_b[b] += m;
    }
    let cut = |mass: &[f64]| -> (usize, f64) {
        let mut tail = 0.0;
        let mut top = mass.len() - 1;
        while top > 0 && tail + mass[top] <= tol / 4.0 {
            tail += mass[top];
            top -= 1;
        }
        (top, tail)
    };
    let (a_top, tail_a) = cut(&mass_a);
    let (b_top, tail_b) = cut(&mass_b);
    let w = Weights::new(env, params)?;
    let (vec, log_abs) = engine.weighted_endpoint_spectral(&w.u[..=a_top], &w.v[..=b_top], marg.log_z);
    // rounding error of the accumulated terms
    if !log_abs.is_finite() || log_abs + (f64::EPSILON * 64.0).ln() > (tol / 4.0).ln() {
        return Ok(None);
    }
    let err = log_abs.exp() * f64::EPSILON * 64.0;
    let pmf: Vec<f64> = vec.into_iter().map(|p| if p < 0.0 && p > -err { 0.0 } else { p }).collect();
    if pmf.iter().any(|&p| !(p >= 0.0)) {
        return Ok(None);
    }
    let missing = tail_a + tail_b + marg.neglected + err;
    if (pmf.iter().sum::<f64>() - 1.0).abs() > missing + tol {
        return Ok(None);
    }
    Ok(Some(EndpointMarginal {
        n,
        pmf,
        neglected: marg.neglected + tail_a + tail_b + err,
        method: EndpointMethod::ByParts,
    }))
}

/// `ln` of the Gibbs weight of cell `(a, b)`.
pub fn log_weight(env: &Environment, params: &PolymerParams, a: usize, b: usize) -> Result<f64> {
    params.validate()?;
    if a > params.n || b > params.n {
        return Err(Error::param(format!("cell ({a},{b}) outside [0,N]^2")));
    }
    Weights::new(env, params)?.cell(a, b)
}

pub fn log_partition(env: &Environment, params: &PolymerParams, window: Window) -> Result<f64> {
    PolymerEngine::new().log_partition(env, params, window)
}

pub fn log_partition_restricted(
    env: &Environment,
    params: &PolymerParams,
    keep: &(dyn Fn(usize, usize) -> bool + Sync),
) -> Result<f64> {
    PolymerEngine::new().log_partition_restricted(env, params, Window::Auto, keep)
}

pub fn polymer_range_marginal(env: &Environment, params: &PolymerParams) -> Result<PolymerRangeMarginal> {
    PolymerEngine::new().range_marginal(env, params, Window::Auto)
}

pub fn polymer_endpoint_marginal(env: &Environment, params: &PolymerParams) -> Result<EndpointMarginal> {
    PolymerEngine::new().endpoint_marginal(env, params, Window::Auto, 1e-12)
}

/// `ln Z` by summing over all `2^N` paths.
pub fn oracle_log_partition(env: &Environment, params: &PolymerParams) -> Result<f64> {
    params.validate()?;
    let n = params.n;
    if n > ORACLE_MAX_N {
        return Err(Error::CostGuard { n, limit: ORACLE_MAX_N });
    }
    let beta = params.beta_n();
    let h = params.h_n();
    let omega: Vec<f64> = (-(n as i64)..=n as i64).map(|x| env.omega(x)).collect();
    let mut acc = LogSumExp::new();
    for mask in 0u64..(1u64 << n) {
        let (mut s, mut lo, mut hi) = (0i64, 0i64, 0i64);
        for i in 0..n {
            s += if mask >> i & 1 == 1 { 1 } else { -1 };
            lo = lo.min(s);
            hi = hi.max(s);
        }
        let mut total = 0.0;
        if beta != 0.0 {
            for x in lo..=hi {
                total += omega[(x + n as i64) as usize];
            }
            total *= beta;
        }
        let lw = total - h * (hi - lo + 1) as f64;
        if !lw.is_finite() {
            return Err(Error::NonFiniteWeight { a: (-lo) as usize, b: hi as usize });
        }
        acc.push(lw);
    }
    Ok(acc.value() - n as f64 * std::f64::consts::LN_2)
}

/// Range and endpoint laws of the polymer by enumerating all `2^N` paths.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleMarginals {
    pub log_z: f64,
    /// `P_N(M^- = -a, M^+ = b)` keyed by `(a, b)`.
    pub range: std::collections::BTreeMap<(usize, usize), f64>,
    /// `endpoint[x + N] = P_N(S_N = x)`.
    pub endpoint: Vec<f64>,
}

pub fn oracle_marginals(env: &Environment, params: &PolymerParams) -> Result<OracleMarginals> {
    let log_z = oracle_log_partition(env, params)?;
    let n = params.n;
    let beta = params.beta_n();
    let h = params.h_n();
    let omega: Vec<f64> = (-(n as i64)..=n as i64).map(|x| env.omega(x)).collect();
    let mut range = std::collections::BTreeMap::new();
    let mut endpoint = vec![0.0; 2 * n + 1];
    let shift = log_z + n as f64 * std::f64::consts::LN_2;
    for mask in 0u64..(1u64 << n) {
        let (mut s, mut lo, mut hi) = (0i64, 0i64, 0i64);
        for i in 0..n {
            s += if mask >> i & 1 == 1 { 1 } else { -1 };
            lo = lo.min(s);
            hi = hi.max(s);
        }
        let mut total = 0.0;
        if beta != 0.0 {
            for x in lo..=hi {
                total += omega[(x + n as i64) as usize];
            }
            total *= beta;
        }
        let p = (total - h * (hi - lo + 1) as f64 - shift).exp();
        *range.entry(((-lo) as usize, hi as usize)).or_insert(0.0) += p;
        endpoint[(s + n as i64) as usize] += p;
    }
    Ok(OracleMarginals { log_z, range, endpoint })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_environment, DisorderSpec};
    use crate::srw_exact::range_joint_law;

    fn params(beta: f64, h: f64, n: usize) -> PolymerParams {
        PolymerParams::new(1.5, beta, h, Exponent::Value(0.0), Exponent::Value(0.0), n).unwrap()
    }

    fn env(seed: u64) -> Environment {
        make_environment(DisorderSpec::new(1.5, 0.5, seed).unwrap()).unwrap()
    }

    #[test]
    fn trivial_values() {
        let e = env(1);
        let p = params(0.0, 0.7, 1);
        assert!((log_partition(&e, &p, Window::Auto).unwrap() + 1.4).abs() < 1e-15);
        let p = params(0.0, 0.0, 2);
        assert_eq!(log_partition(&e, &p, Window::Auto).unwrap(), 0.0);
        let p = params(0.3, 0.2, 1);
        let (w0, w1, wm) = (e.omega(0), e.omega(1), e.omega(-1));
        let expect = (0.5 * (0.3 * (w0 + w1) - 0.4).exp() + 0.5 * (0.3 * (w0 + wm) - 0.4).exp()).ln();
        assert!((oracle_log_partition(&e, &p).unwrap() - expect).abs() < 1e-14);
        assert!((log_partition(&e, &p, Window::Auto).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn oracle_guard() {
        let e = env(1);
        assert!(matches!(oracle_log_partition(&e, &params(1.0, 1.0, 21)), Err(Error::CostGuard { .. })));
    }

    #[test]
    fn matches_oracle() {
        for (seed, n) in [(3u64, 5usize), (4, 12), (5, 16)] {
            let e = env(seed);
            for (b, h) in [(0.5, 0.3), (1.2, -0.4), (0.0, 0.8)] {
                let p = params(b, h, n);
                let z = log_partition(&e, &p, Window::Auto).unwrap();
                let o = oracle_log_partition(&e, &p).unwrap();
                assert!((z - o).abs() <= 1e-12 * o.abs().max(1.0), "seed={seed} n={n}: {z} vs {o}");
            }
        }
    }

    #[test]
    fn free_marginal_is_range_law() {
        let e = env(2);
        let p = params(0.0, 0.0, 40);
        let m = polymer_range_marginal(&e, &p).unwrap();
        let law = range_joint_law(40, 40, 40);
        for (a, b, lp) in law.iter() {
            let got = m.log_prob(a, b);
            if lp.is_zero() {
                assert!(got.is_zero());
            } else {
                assert!((got.ln() - lp.ln()).abs() < 1e-12);
            }
        }
        assert!((m.total() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn large_field_concentrates_on_short_ranges() {
        let e = env(6);
        let p = params(0.0, 3.0, 30);
        let m = polymer_range_marginal(&e, &p).unwrap();
        let mass_short: f64 = m.iter().filter(|(a, b, _)| a + b <= 2).map(|(_, _, p)| p.prob()).sum();
        let weaker = polymer_range_marginal(&e, &params(0.0, 0.5, 30)).unwrap();
        let weaker_short: f64 = weaker.iter().filter(|(a, b, _)| a + b <= 2).map(|(_, _, p)| p.prob()).sum();
        assert!(mass_short > weaker_short);
    }

    #[test]
    fn endpoint_free_is_binomial() {
        let e = env(7);
        let p = params(0.0, 0.0, 30);
        let m = polymer_endpoint_marginal(&e, &p).unwrap();
        for x in -30i64..=30 {
            let expect = crate::srw_exact::log_endpoint_pmf(30, x).exp();
            assert!((m.prob(x) - expect).abs() < 1e-13, "x={x}");
        }
    }

    #[test]
    fn window_growth_respects_bound() {
        let e = env(8);
        let p = params(0.4, 0.05, 200);
        let eng = PolymerEngine::new();
        let small = eng.partition(&e, &p, Window::Fixed { a_max: 20, b_max: 20 }).unwrap();
        let full = eng.partition(&e, &p, Window::Fixed { a_max: 200, b_max: 200 }).unwrap();
        assert!(full.exact);
        let gap = (full.log_z.exp() - small.log_z.exp()).max(0.0);
        assert!(gap <= small.log_neglected.exp() * (1.0 + 1e-9));
    }

    #[test]
    fn params_serde() {
        let p = params(1.0, -0.5, 64);
        let s = toml::to_string(&p).unwrap();
        let back: PolymerParams = toml::from_str(&s).unwrap();
        assert_eq!(p, back);
        let q: PolymerParams =
            toml::from_str("alpha = 2.0\nbeta_hat = 1.0\nh_hat = 0.0\ngamma = 0.3\nzeta = \"inf\"\nN = 10\n").unwrap();
        assert_eq!(q.zeta, Exponent::Disabled);
        assert_eq!(q.h_n(), 0.0);
    }
}
