//! Exact law of `(-M_N^-, M_N^+)`, optionally resolved by the endpoint `S_N`.
//!
//! A cell probability `P(M^- = -a, M^+ = b)` is a second difference of either
//! the confined survival `q(a,b) = P(M^- >= -a, M^+ <= b)` or of the two-sided
//! hitting probability `T(a,b) = P(M^- <= -a, M^+ >= b)`. The first is well
//! conditioned for folded cells (width small against `sqrt N`), the second for
//! stretched ones; each cell is evaluated by the cheaper route and re-evaluated by
//! the other when cancellation was too strong. Short walks use an exact forward
//! recursion instead.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::binomial::WalkTables;
use super::confined::{add_endpoint_spectral, endpoint_spectral_scale, ln_cos_pi_frac, push_survival_terms, sin_pi_frac};
use crate::logspace::{LogProb, LogSumExp, SignedSum};

/// Walks up to this length use the exact forward recursion over (min, max, position).
pub const DP_MAX_N: usize = 64;

/// Accept a route once `sum |terms| / |cell|` is below `exp(ACCEPT_LOG_CONDITION)`.
const ACCEPT_LOG_CONDITION: f64 = 11.5;

const TRUNCATION_NATS: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Route {
    /// Exact forward recursion, or a cell known to be empty.
    Exact,
    /// Alternating reflection series in the maximum tails.
    Reflection,
    /// Second difference of spectral confined survivals.
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Exact recursion for short walks, analytic routes otherwise.
    Auto,
    /// Always use the analytic routes (for cross-checks).
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellValue {
    pub log_prob: f64,
    pub route: Route,
    /// `ln(sum |terms| / |value|)`; zero for exact cells.
    pub log_condition: f64,
    /// `ln(sum |terms|)`.
    pub log_abs_total: f64,
}

impl CellValue {
    fn exact(log_prob: f64) -> Self {
        CellValue { log_prob, route: Route::Exact, log_condition: 0.0, log_abs_total: log_prob }
    }
}

/// A vector `values[x - lo] * exp(log_scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledVec {
    pub log_scale: f64,
    pub lo: i64,
    pub values: Vec<f64>,
}

impl ScaledVec {
    pub fn log_at(&self, x: i64) -> f64 {
        let i = x - self.lo;
        if i < 0 || i as usize >= self.values.len() || self.values[i as usize] <= 0.0 {
            f64::NEG_INFINITY
        } else {
            self.values[i as usize].ln() + self.log_scale
        }
    }
}

/// `min(a,b) + a + b <= n`: a walk must travel to one extreme and then across.
#[inline]
pub fn feasible(n: usize, a: usize, b: usize) -> bool {
    if n == 0 {
        return a == 0 && b == 0;
    }
    a + b >= 1 && a.min(b) + a + b <= n
}

/// Largest feasible `b` for a given `a`, if any.
pub fn feasible_b_max(n: usize, a: usize) -> Option<usize> {
    if n == 0 {
        return (a == 0).then_some(0);
    }
    if a > n {
        None
    } else if 3 * a <= n {
        Some(n - 2 * a)
    } else {
        Some((n - a) / 2)
    }
}

struct JointDp {
    n: usize,
    // index ((a * (n+1)) + b) * (n+1) + (x + a)
    probs: Vec<f64>,
}

impl JointDp {
    fn new(n: usize) -> Self {
        let d = n + 1;
        let idx = |a: usize, b: usize, y: usize| (a * d + b) * d + y;
        let mut cur = vec![0.0f64; d * d * d];
        let mut next = vec![0.0f64; d * d * d];
        cur[idx(0, 0, 0)] = 1.0;
        for t in 0..n {
            next.iter_mut().for_each(|v| *v = 0.0);
            for a in 0..=t {
                for b in 0..=(t - a) {
                    for y in 0..=(a + b) {
                        let p = cur[idx(a, b, y)];
                        if p == 0.0 {
                            continue;
                        }
                        let half = 0.5 * p;
                        if y == a + b {
                            next[idx(a, b + 1, y + 1)] += half;
                        } else {
                            next[idx(a, b, y + 1)] += half;
                        }
                        if y == 0 {
                            next[idx(a + 1, b, 0)] += half;
                        } else {
                            next[idx(a, b, y - 1)] += half;
                        }
                    }
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        JointDp { n, probs: cur }
    }

    fn cell(&self, a: usize, b: usize) -> f64 {
        let d = self.n + 1;
        let base = (a * d + b) * d;
        self.probs[base..base + a + b + 1].iter().sum()
    }

    fn endpoint(&self, a: usize, b: usize) -> Vec<f64> {
        let d = self.n + 1;
        let base = (a * d + b) * d;
        self.probs[base..base + a + b + 1].to_vec()
    }
}

/// Cell-level evaluator for a fixed walk length.
pub struct RangeEngine {
    n: usize,
    tables: WalkTables,
    joint: Option<JointDp>,
}

impl std::fmt::Debug for RangeEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RangeEngine").field("n", &self.n).field("exact", &self.joint.is_some()).finish()
    }
}

impl RangeEngine {
    pub fn new(n: usize) -> Self {
        Self::with_method(n, Method::Auto)
    }

    pub fn with_method(n: usize, method: Method) -> Self {
        let joint = (method == Method::Auto && n <= DP_MAX_N).then(|| JointDp::new(n));
        RangeEngine { n, tables: WalkTables::new(n), joint }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tables(&self) -> &WalkTables {
        &self.tables
    }

    pub fn is_exact(&self) -> bool {
        self.joint.is_some()
    }

    /// `ln P(M^- = -a, M^+ = b)`.
    pub fn log_cell(&self, a: usize, b: usize) -> f64 {
        self.cell(a, b).log_prob
    }

    /// Cell probability with the route used and its conditioning.
    pub fn cell(&self, a: usize, b: usize) -> CellValue {
        // The law is symmetric; evaluating the canonical orientation makes the
        // symmetry exact.
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if !feasible(self.n, lo, hi) {
            return CellValue::exact(f64::NEG_INFINITY);
        }
        if let Some(j) = &self.joint {
            return CellValue::exact(j.cell(lo, hi).ln());
        }
        if self.n == 0 {
            return CellValue::exact(0.0);
        }
        self.cell_analytic(lo as i64, hi as i64)
    }

    fn cell_analytic(&self, a: i64, b: i64) -> CellValue {
        let reflection_first = self.reflection_cost(a, b) <= self.spectral_cost(a, b);
        let first = if reflection_first { self.cell_reflection(a, b) } else { self.cell_spectral(a, b) };
        if first.log_condition <= ACCEPT_LOG_CONDITION {
            return first;
        }
        let second = if reflection_first { self.cell_spectral(a, b) } else { self.cell_reflection(a, b) };
        if second.log_condition < first.log_condition {
            second
        } else {
            first
        }
    }

    fn reflection_cost(&self, a: i64, b: i64) -> f64 {
        let w = (a + b + 1) as f64;
        8.0 * (self.n as f64 / w + 1.0)
    }

    fn spectral_cost(&self, a: i64, b: i64) -> f64 {
        let m = (a + b + 2) as f64;
        let r = (m / std::f64::consts::PI * (2.0 * (TRUNCATION_NATS + 5.0) / self.n as f64).sqrt()).ceil() + 1.0;
        // trig evaluations weigh roughly three table lookups
        24.0 * r.min(m / 2.0)
    }

    fn finish(sum: &SignedSum, route: Route) -> CellValue {
        let v = sum.value();
        let log_prob = if v.sign() > 0 { v.log_abs() } else { f64::NEG_INFINITY };
        CellValue { log_prob, route, log_condition: sum.log_condition(), log_abs_total: sum.log_abs_total() }
    }

    /// Pushes `sign * T(a, b)`.
    fn push_t(&self, a: i64, b: i64, sign: i8, sum: &mut SignedSum) {
        let g = |m: i64| self.tables.log_max_tail(m);
        if a <= 0 && b <= 0 {
            sum.push_log(sign, 0.0);
            return;
        }
        if a <= 0 {
            sum.push_log(sign, g(b));
            return;
        }
        if b <= 0 {
            sum.push_log(sign, g(a));
            return;
        }
        let w = a + b;
        let n = self.n as i64;
        let mut k = 2i64;
        loop {
            let upper = b + (k - 1) * w;
            let lower = a + (k - 1) * w;
            if upper.min(lower) > n {
                break;
            }
            let s = if k % 2 == 0 { sign } else { -sign };
            sum.push_log(s, g(upper));
            sum.push_log(s, g(lower));
            k += 1;
        }
    }

    fn cell_reflection(&self, a: i64, b: i64) -> CellValue {
        let mut sum = SignedSum::new();
        self.push_t(a, b, 1, &mut sum);
        self.push_t(a + 1, b, -1, &mut sum);
        self.push_t(a, b + 1, -1, &mut sum);
        self.push_t(a + 1, b + 1, 1, &mut sum);
        Self::finish(&sum, Route::Reflection)
    }

    fn cell_spectral(&self, a: i64, b: i64) -> CellValue {
        let mut sum = SignedSum::new();
        push_survival_terms(self.n, a, b, 1, &mut sum);
        push_survival_terms(self.n, a - 1, b, -1, &mut sum);
        push_survival_terms(self.n, a, b - 1, -1, &mut sum);
        push_survival_terms(self.n, a - 1, b - 1, 1, &mut sum);
        Self::finish(&sum, Route::Spectral)
    }

    /// `ln T(a,b)` for `a, b >= 0`, i.e. the walk reaches both `-a` and `b`.
    pub fn log_hit_both(&self, a: usize, b: usize) -> f64 {
        let mut sum = SignedSum::new();
        self.push_t(a as i64, b as i64, 1, &mut sum);
        let v = sum.value();
        if v.sign() > 0 {
            v.log_abs()
        } else {
            f64::NEG_INFINITY
        }
    }

    /// `ln P(M^- < -a_max or M^+ > b_max)`.
    pub fn log_overflow(&self, a_max: usize, b_max: usize) -> f64 {
        let n = self.n as i64;
        let (a1, b1) = (a_max as i64 + 1, b_max as i64 + 1);
        if a1 > n && b1 > n {
            return f64::NEG_INFINITY;
        }
        let mut sum = SignedSum::new();
        sum.push_log(1, self.tables.log_max_tail(b1));
        sum.push_log(1, self.tables.log_max_tail(a1));
        self.push_t(a1, b1, -1, &mut sum);
        let v = sum.value();
        if v.sign() > 0 {
            v.log_abs().min(0.0)
        } else {
            f64::NEG_INFINITY
        }
    }

    /// `P(M^- = -a, M^+ = b, S_N = x)` for `x` in `[-a, b]`.
    pub fn cell_endpoint(&self, a: usize, b: usize) -> ScaledVec {
        if a > b {
            let mut v = self.cell_endpoint(b, a);
            v.values.reverse();
            v.lo = -(a as i64);
            return v;
        }
        let width = a + b + 1;
        if !feasible(self.n, a, b) {
            return ScaledVec { log_scale: 0.0, lo: -(a as i64), values: vec![0.0; width] };
        }
        if let Some(j) = &self.joint {
            return ScaledVec { log_scale: 0.0, lo: -(a as i64), values: j.endpoint(a, b) };
        }
        let (ai, bi) = (a as i64, b as i64);
        let cell = self.cell_analytic(ai, bi);
        let mut values = vec![0.0; width];
        let log_scale = match cell.route {
            Route::Spectral => {
                let w = ai + bi;
                let s = endpoint_spectral_scale(self.n, w).max(endpoint_spectral_scale(self.n, w - 1));
                add_endpoint_spectral(self.n, ai, bi, 1.0, s, &mut values, ai);
                add_endpoint_spectral(self.n, ai - 1, bi, -1.0, s, &mut values, ai);
                add_endpoint_spectral(self.n, ai, bi - 1, -1.0, s, &mut values, ai);
                add_endpoint_spectral(self.n, ai - 1, bi - 1, 1.0, s, &mut values, ai);
                s
            }
            _ => {
                let s = cell.log_abs_total;
                for x in -ai..=bi {
                    values[(x + ai) as usize] = self.t_point(ai, bi, x, s) - self.t_point(ai + 1, bi, x, s)
                        - self.t_point(ai, bi + 1, x, s)
                        + self.t_point(ai + 1, bi + 1, x, s);
                }
                s
            }
        };
        for v in values.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        ScaledVec { log_scale, lo: -ai, values }
    }

    /// `T(a, b, x) * exp(-s)` where `T(a,b,x) = P(M^- <= -a, M^+ >= b, S_N = x)`.
    fn t_point(&self, a: i64, b: i64, x: i64, s: f64) -> f64 {
        let p = |y: i64| (self.tables.log_pmf(y) - s).exp();
        // P(reach level m, end at e) by reflection about m.
        let hit = |m: i64, e: i64| if e >= m { p(e) } else { p(2 * m - e) };
        if a <= 0 && b <= 0 {
            return p(x);
        }
        if a <= 0 {
            return hit(b, x);
        }
        if b <= 0 {
            return hit(a, -x);
        }
        let w = a + b;
        let n = self.n as i64;
        let mut total = 0.0;
        let mut k = 2i64;
        loop {
            let mu = b + (k - 1) * w;
            let ml = a + (k - 1) * w;
            if mu.min(ml) > n {
                break;
            }
            let (eu, el) = if k % 2 == 1 {
                (x + (k - 1) * w, -x + (k - 1) * w)
            } else {
                (2 * b - x + (k - 2) * w, 2 * a + x + (k - 2) * w)
            };
            let t = hit(mu, eu) + hit(ml, el);
            if k % 2 == 0 {
                total += t;
            } else {
                total -= t;
            }
            k += 1;
        }
        total
    }

    /// `sum_{a <= A, b <= B} e^{u(a) + v(b)} P(M^- = -a, M^+ = b, S_N = x)` for every
    /// `x`, by summation by parts against the spectral confined endpoint law.
    ///
    /// Returns the vector (index `x + N`) multiplied by `exp(-log_ref)` together with
    /// `ln` of the sum of absolute contributions on the same scale, which bounds the
    /// rounding error. Only sensible when the weights do not favour stretched cells.
    pub fn weighted_endpoint_spectral(&self, log_u: &[f64], log_v: &[f64], log_ref: f64) -> (Vec<f64>, f64) {
        let n = self.n as i64;
        let mut out = vec![0.0f64; 2 * self.n + 1];
        let mut abs = LogSumExp::new();
        if log_u.is_empty() || log_v.is_empty() {
            return (out, f64::NEG_INFINITY);
        }
        let a_top = log_u.len() - 1;
        let b_top = log_v.len() - 1;
        // First differences U(a) - U(a+1) with U = 0 past the window, as (sign, ln|.|).
        let diff = |lw: &[f64]| -> Vec<(f64, f64)> {
            (0..lw.len())
                .map(|i| {
                    if i + 1 == lw.len() {
                        return (1.0, lw[i]);
                    }
                    let d = lw[i + 1] - lw[i];
                    if d == 0.0 {
                        (0.0, f64::NEG_INFINITY)
                    } else {
                        (if d < 0.0 { 1.0 } else { -1.0 }, lw[i] + (-d.exp_m1()).abs().ln())
                    }
                })
                .collect()
        };
        let du = diff(log_u);
        let dv = diff(log_v);
        let w_top = a_top + b_top;
        let mut p0 = Vec::new();
        let mut pc = Vec::new();
        let mut ps = Vec::new();
        for w in 1..=w_top.min(self.n) {
            let wi = w as i64;
            let m = wi + 2;
            let a_lo = w.saturating_sub(b_top);
            let a_hi = w.min(a_top);
            if a_lo > a_hi {
                continue;
            }
            let shift = (a_lo..=a_hi).map(|a| du[a].1 + dv[w - a].1).fold(f64::NEG_INFINITY, f64::max);
            if shift == f64::NEG_INFINITY {
                continue;
            }
            let coef: Vec<f64> =
                (a_lo..=a_hi).map(|a| du[a].0 * dv[w - a].0 * (du[a].1 + dv[w - a].1 - shift).exp()).collect();
            let coef_abs: f64 = coef.iter().map(|c| c.abs()).sum();
            let base = shift - log_ref;
            let ln_pref = (2.0 / m as f64).ln() + std::f64::consts::LN_2;
            let lead = n as f64 * ln_cos_pi_frac(1, m);
            for r in 1..=m / 2 {
                if 2 * r == m {
                    break;
                }
                let ln_lambda = n as f64 * ln_cos_pi_frac(r, m);
                if r > 1 && ln_lambda + (m as f64).ln() < lead - TRUNCATION_NATS {
                    break;
                }
                let ln_factor = ln_pref + ln_lambda + base;
                if ln_factor < -745.0 {
                    break;
                }
                let factor = ln_factor.exp();
                abs.push(ln_factor + coef_abs.ln() + ((2 * w + 1) as f64).ln());
                // prefix sums over a of c_a, c_a cos((2a+2)t), c_a sin((2a+2)t)
                p0.clear();
                pc.clear();
                ps.clear();
                let (mut s0, mut sc, mut ss) = (0.0, 0.0, 0.0);
                p0.push(0.0);
                pc.push(0.0);
                ps.push(0.0);
                for (i, &c) in coef.iter().enumerate() {
                    let a = (a_lo + i) as i64;
                    let arg = r * (2 * a + 2);
                    s0 += c;
                    sc += c * sin_pi_frac(2 * arg + m, 2 * m);
                    ss += c * sin_pi_frac(arg, m);
                    p0.push(s0);
                    pc.push(sc);
                    ps.push(ss);
                }
                for x in -wi..=wi {
                    if (x - n).rem_euclid(2) != 0 {
                        continue;
                    }
                    let lo = (a_lo as i64).max(-x).max(0);
                    let hi = (a_hi as i64).min(wi - x).min(wi);
                    if lo > hi {
                        continue;
                    }
                    let (i0, i1) = ((lo - a_lo as i64) as usize, (hi - a_lo as i64 + 1) as usize);
                    let r0 = p0[i1] - p0[i0];
                    let rc = pc[i1] - pc[i0];
                    let rs = ps[i1] - ps[i0];
                    let cx = sin_pi_frac(2 * r * x + m, 2 * m);
                    let sx = sin_pi_frac(r * x, m);
                    let val = 0.5 * (cx * r0 - (cx * rc - sx * rs));
                    out[(x + n) as usize] += factor * val;
                }
            }
        }
        (out, abs.value())
    }
}

/// Exact joint law of `(-M_N^-, M_N^+)` on the window `[0, a_max] x [0, b_max]`
/// plus the mass outside it.
#[derive(Debug, Clone)]
pub struct RangeLaw {
    n: usize,
    a_max: usize,
    b_max: usize,
    row_start: Vec<usize>,
    log_probs: Vec<f64>,
    overflow: LogProb,
    worst_log_condition: f64,
    // per stored cell, log P(cell, S_N = x) for x = -a..=b
    endpoint: Option<Vec<Vec<f64>>>,
    engine: Arc<RangeEngine>,
}

impl RangeLaw {
    pub fn build(engine: Arc<RangeEngine>, a_max: usize, b_max: usize) -> Self {
        let n = engine.n();
        let rows: Vec<Vec<CellValue>> = (0..=a_max)
            .into_par_iter()
            .map(|a| match feasible_b_max(n, a) {
                Some(top) => (0..=top.min(b_max)).map(|b| engine.cell(a, b)).collect(),
                None => Vec::new(),
            })
            .collect();
        let mut row_start = Vec::with_capacity(a_max + 2);
        let mut log_probs = Vec::new();
        let mut worst = 0.0f64;
        for row in &rows {
            row_start.push(log_probs.len());
            for c in row {
                log_probs.push(c.log_prob);
                if c.log_prob > f64::NEG_INFINITY {
                    worst = worst.max(c.log_condition);
                }
            }
        }
        row_start.push(log_probs.len());
        let overflow = LogProb(engine.log_overflow(a_max, b_max));
        RangeLaw { n, a_max, b_max, row_start, log_probs, overflow, worst_log_condition: worst, endpoint: None, engine }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a_max(&self) -> usize {
        self.a_max
    }

    pub fn b_max(&self) -> usize {
        self.b_max
    }

    pub fn engine(&self) -> &Arc<RangeEngine> {
        &self.engine
    }

    /// Mass outside the window.
    pub fn overflow(&self) -> LogProb {
        self.overflow
    }

    /// Largest `ln(sum |terms| / |cell|)` met while building the table.
    pub fn worst_log_condition(&self) -> f64 {
        self.worst_log_condition
    }

    /// Stored cells of row `a`, indexed by `b`.
    pub fn row(&self, a: usize) -> &[f64] {
        if a > self.a_max {
            return &[];
        }
        &self.log_probs[self.row_start[a]..self.row_start[a + 1]]
    }

    pub fn log_prob(&self, a: usize, b: usize) -> LogProb {
        match self.row(a).get(b) {
            Some(&v) => LogProb(v),
            None => LogProb::ZERO,
        }
    }

    /// All stored cells in lexicographic `(a, b)` order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, LogProb)> + '_ {
        (0..=self.a_max).flat_map(move |a| self.row(a).iter().enumerate().map(move |(b, &v)| (a, b, LogProb(v))))
    }

    /// Window mass plus overflow mass, in linear scale.
    pub fn total_mass(&self) -> f64 {
        let mut acc = LogSumExp::new();
        for &v in &self.log_probs {
            acc.push(v);
        }
        acc.push(self.overflow.ln());
        acc.value().exp()
    }

    pub fn has_endpoint(&self) -> bool {
        self.endpoint.is_some()
    }

    /// `ln P(M^- = -a, M^+ = b, S_N = x)` when the endpoint extension is present.
    pub fn endpoint_log_prob(&self, a: usize, b: usize, x: i64) -> LogProb {
        let Some(ep) = &self.endpoint else { return LogProb::ZERO };
        if b >= self.row(a).len() {
            return LogProb::ZERO;
        }
        let idx = self.row_start[a] + b;
        let i = x + a as i64;
        match ep[idx].get(i.max(-1) as usize) {
            Some(&v) if i >= 0 => LogProb(v),
            _ => LogProb::ZERO,
        }
    }
}

/// Joint law of `(-M_N^-, M_N^+)` on the given window.
pub fn range_joint_law(n: usize, a_max: usize, b_max: usize) -> RangeLaw {
    RangeLaw::build(Arc::new(RangeEngine::new(n)), a_max, b_max)
}

/// Joint law of `(-M_N^-, M_N^+, S_N)` on the given window.
pub fn range_endpoint_joint_law(n: usize, a_max: usize, b_max: usize) -> RangeLaw {
    let mut law = range_joint_law(n, a_max, b_max);
    let engine = law.engine.clone();
    let cells: Vec<(usize, usize)> = law.iter().map(|(a, b, _)| (a, b)).collect();
    let endpoint: Vec<Vec<f64>> = cells
        .par_iter()
        .map(|&(a, b)| {
            let v = engine.cell_endpoint(a, b);
            (-(a as i64)..=b as i64).map(|x| v.log_at(x)).collect()
        })
        .collect();
    law.endpoint = Some(endpoint);
    law
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feasibility_region() {
        assert!(feasible(2, 0, 2));
        assert!(!feasible(2, 1, 1));
        assert!(feasible(3, 1, 1));
        assert!(!feasible(1, 0, 0));
        assert!(feasible(0, 0, 0));
        for n in 1..20usize {
            for a in 0..=n + 1 {
                let top = feasible_b_max(n, a);
                for b in 0..=n + 1 {
                    assert_eq!(feasible(n, a, b), top.is_some_and(|t| b <= t) && a + b >= 1, "n={n} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn tiny_laws() {
        let law = range_joint_law(1, 3, 3);
        assert_eq!(law.log_prob(0, 1).prob(), 0.5);
        assert_eq!(law.log_prob(1, 0).prob(), 0.5);
        let law = range_joint_law(2, 3, 3);
        for (a, b) in [(0, 1), (0, 2), (1, 0), (2, 0)] {
            assert_eq!(law.log_prob(a, b).prob(), 0.25);
        }
        assert!(law.log_prob(1, 1).is_zero());
    }

    #[test]
    fn analytic_routes_match_exact_recursion() {
        for n in [5usize, 17, 40, 64] {
            let exact = RangeEngine::new(n);
            let analytic = RangeEngine::with_method(n, Method::Analytic);
            for a in 0..=n {
                for b in 0..=n {
                    let e = exact.log_cell(a, b);
                    let c = analytic.cell(a, b);
                    if e == f64::NEG_INFINITY {
                        assert_eq!(c.log_prob, f64::NEG_INFINITY, "n={n} a={a} b={b}");
                    } else {
                        assert!((e - c.log_prob).abs() < 1e-11, "n={n} a={a} b={b} {e} {c:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn analytic_endpoint_matches_exact_recursion() {
        for n in [9usize, 30, 63] {
            let exact = RangeEngine::new(n);
            let analytic = RangeEngine::with_method(n, Method::Analytic);
            for a in 0..=n / 2 {
                for b in 0..=n {
                    if !feasible(n, a, b) {
                        continue;
                    }
                    let e = exact.cell_endpoint(a, b);
                    let c = analytic.cell_endpoint(a, b);
                    let cell = exact.log_cell(a, b).exp();
                    for x in -(a as i64)..=b as i64 {
                        let pe = e.log_at(x).exp();
                        let pc = c.log_at(x).exp();
                        assert!((pe - pc).abs() <= 1e-11 * cell, "n={n} a={a} b={b} x={x} {pe} {pc}");
                    }
                }
            }
        }
    }

    #[test]
    fn overflow_closes_the_mass() {
        for (n, am, bm) in [(12usize, 3usize, 5usize), (80, 10, 7), (500, 30, 60)] {
            let law = range_joint_law(n, am, bm);
            assert!((law.total_mass() - 1.0).abs() < 1e-12, "n={n}");
        }
        let law = range_joint_law(12, 12, 12);
        assert!(law.overflow().is_zero());
        assert!((law.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_by_parts_matches_cellwise_sum() {
        let n = 150usize;
        let engine = RangeEngine::with_method(n, Method::Analytic);
        let (am, bm) = (40usize, 35usize);
        let lu: Vec<f64> = (0..=am).map(|a| 0.3 * (a as f64 * 0.7).sin() - 0.01 * a as f64).collect();
        let lv: Vec<f64> = (0..=bm).map(|b| 0.2 * (b as f64 * 1.3).cos() - 0.02 * b as f64).collect();
        let mut direct = vec![0.0; 2 * n + 1];
        for a in 0..=am {
            for b in 0..=bm {
                if !feasible(n, a, b) {
                    continue;
                }
                let v = engine.cell_endpoint(a, b);
                for x in -(a as i64)..=b as i64 {
                    direct[(x + n as i64) as usize] += (lu[a] + lv[b] + v.log_at(x)).exp();
                }
            }
        }
        let (by_parts, _) = engine.weighted_endpoint_spectral(&lu, &lv, 0.0);
        for i in 0..=2 * n {
            assert!((direct[i] - by_parts[i]).abs() < 1e-12, "i={i} {} {}", direct[i], by_parts[i]);
        }
    }
}
