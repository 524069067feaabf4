//! Survival of the walk inside `[-a, b]`, by vector iteration and by the sine
//! eigenbasis of the path graph.

use crate::logspace::{LogProb, SignedLog, SignedSum};

/// Above this many elementary operations (`N * width`) the automatic choice
/// switches from vector iteration to the spectral sum.
pub const SPECTRAL_CROSSOVER: usize = 1 << 20;

/// Terms smaller than `exp(-TRUNCATION_NATS)` times the leading one are dropped.
const TRUNCATION_NATS: f64 = 40.0;

const RESCALE_BITS: i32 = 600;

/// `sin(pi * num / den)` with exact argument reduction.
#[inline]
pub(crate) fn sin_pi_frac(num: i64, den: i64) -> f64 {
    let period = 2 * den;
    let mut r = num.rem_euclid(period);
    let mut sign = 1.0;
    if r >= den {
        r -= den;
        sign = -1.0;
    }
    if 2 * r > den {
        r = den - r;
    }
    sign * (std::f64::consts::PI * r as f64 / den as f64).sin()
}

/// `ln |cos(pi r / m)|` for `0 < r < m/2`, computed through `sin^2` to keep
/// precision when the cosine is close to one.
#[inline]
pub(crate) fn ln_cos_pi_frac(r: i64, m: i64) -> f64 {
    let s = (std::f64::consts::PI * r as f64 / (2 * m) as f64).sin();
    (-2.0 * s * s).ln_1p()
}

/// Exact survival by iterating `f <- (f(x-1) + f(x+1)) / 2` on `{-a..b}` with an
/// absorbing exterior. Values are dyadic rationals, so for `n <= 53` the result is
/// exact; powers of two are factored out to avoid underflow.
pub fn confined_survival_dp(n: usize, a: usize, b: usize) -> LogProb {
    if n == 0 {
        return LogProb::ONE;
    }
    let w = a + b;
    if w == 0 {
        return LogProb::ZERO;
    }
    let mut f = vec![1.0f64; w + 1];
    let mut g = vec![0.0f64; w + 1];
    let mut exp2: i32 = 0;
    for _ in 0..n {
        for x in 0..=w {
            let left = if x > 0 { f[x - 1] } else { 0.0 };
            let right = if x < w { f[x + 1] } else { 0.0 };
            g[x] = 0.5 * (left + right);
        }
        std::mem::swap(&mut f, &mut g);
        let max = f.iter().copied().fold(0.0, f64::max);
        if max < f64::powi(2.0, -RESCALE_BITS) {
            let s = f64::powi(2.0, RESCALE_BITS);
            f.iter_mut().for_each(|v| *v *= s);
            exp2 -= RESCALE_BITS;
        }
    }
    LogProb(f[a].ln() + f64::from(exp2) * std::f64::consts::LN_2)
}

/// Exact `P(walk stays in [-a, b] up to n, S_n = x)` for `x = -a..=b`, by forward
/// iteration from the start point.
pub fn confined_endpoint_dp(n: usize, a: usize, b: usize) -> Vec<LogProb> {
    let w = a + b;
    let mut f = vec![0.0f64; w + 1];
    let mut g = vec![0.0f64; w + 1];
    f[a] = 1.0;
    let mut exp2: i32 = 0;
    for _ in 0..n {
        for y in 0..=w {
            let left = if y > 0 { f[y - 1] } else { 0.0 };
            let right = if y < w { f[y + 1] } else { 0.0 };
            g[y] = 0.5 * (left + right);
        }
        std::mem::swap(&mut f, &mut g);
        let max = f.iter().copied().fold(0.0, f64::max);
        if max > 0.0 && max < f64::powi(2.0, -RESCALE_BITS) {
            let s = f64::powi(2.0, RESCALE_BITS);
            f.iter_mut().for_each(|v| *v *= s);
            exp2 -= RESCALE_BITS;
        }
    }
    let shift = f64::from(exp2) * std::f64::consts::LN_2;
    f.iter().map(|&v| LogProb(v.ln() + shift)).collect()
}

/// Pushes `sign * q(a, b)` as its spectral series into `sum`.
///
/// `q(a,b) = 2/(w+2) sum_{j odd} sin(j pi (a+1)/(w+2)) cot(j pi / (2(w+2))) cos(j pi/(w+2))^n`.
/// Eigenvalues come in pairs `+-cos(r pi/(w+2))`; both members are visited in
/// order of decreasing magnitude and the series is cut once the remainder bound
/// drops below the truncation level.
pub(crate) fn push_survival_terms(n: usize, a: i64, b: i64, sign: i8, sum: &mut SignedSum) {
    if a < 0 || b < 0 {
        return;
    }
    if n == 0 {
        sum.push_log(sign, 0.0);
        return;
    }
    let w = a + b;
    if w == 0 {
        return;
    }
    let m = w + 2;
    let ln_pref = (2.0 / m as f64).ln();
    let ln_bound = (2.0 * m as f64).ln() + (4.0 / std::f64::consts::PI).ln();
    let mut lead = f64::NEG_INFINITY;
    for r in 1..=m / 2 {
        if 2 * r == m {
            break;
        }
        let ln_lambda = n as f64 * ln_cos_pi_frac(r, m);
        if lead > f64::NEG_INFINITY && ln_bound + ln_lambda < lead - TRUNCATION_NATS {
            break;
        }
        for (j, mirrored) in [(r, false), (m - r, true)] {
            if j % 2 == 0 {
                continue;
            }
            let s = sin_pi_frac(j * (a + 1), m);
            if s == 0.0 {
                continue;
            }
            // cot(j pi / 2m); for the mirrored index this is tan(r pi / 2m).
            let half = std::f64::consts::PI * r as f64 / (2 * m) as f64;
            let cot = if mirrored { half.tan() } else { 1.0 / half.tan() };
            let mut sg = if s > 0.0 { 1 } else { -1 };
            if mirrored && n % 2 == 1 {
                sg = -sg;
            }
            let t = ln_pref + (s.abs() * cot).ln() + ln_lambda;
            sum.push_log(sg * sign, t);
            lead = lead.max(t);
        }
    }
}

/// Spectral evaluation of the confined survival probability.
pub fn confined_survival_spectral(n: usize, a: usize, b: usize) -> LogProb {
    let mut sum = SignedSum::new();
    push_survival_terms(n, a as i64, b as i64, 1, &mut sum);
    signed_to_logprob(sum.value())
}

/// Confined survival by whichever method is cheaper.
pub fn confined_survival(n: usize, a: usize, b: usize) -> LogProb {
    if n.saturating_mul(a + b + 1) <= SPECTRAL_CROSSOVER {
        confined_survival_dp(n, a, b)
    } else {
        confined_survival_spectral(n, a, b)
    }
}

pub(crate) fn signed_to_logprob(v: SignedLog) -> LogProb {
    if v.sign() > 0 {
        LogProb(v.log_abs().min(0.0))
    } else {
        LogProb::ZERO
    }
}

/// Largest possible log-magnitude of a single endpoint-resolved spectral term at
/// width `w`.
pub(crate) fn endpoint_spectral_scale(n: usize, w: i64) -> f64 {
    if w < 0 {
        return f64::NEG_INFINITY;
    }
    let m = w + 2;
    if n == 0 {
        return 0.0;
    }
    (2.0 / m as f64).ln() + n as f64 * ln_cos_pi_frac(1, m)
}

/// Adds `sign * Q(a, b, x) * exp(-log_scale)` into `out[x + offset]` for every
/// `x` in `[-a, b]`, where `Q` is the endpoint-resolved confined law.
pub(crate) fn add_endpoint_spectral(
    n: usize,
    a: i64,
    b: i64,
    sign: f64,
    log_scale: f64,
    out: &mut [f64],
    offset: i64,
) {
    if a < 0 || b < 0 {
        return;
    }
    if n == 0 {
        out[offset as usize] += sign * (-log_scale).exp();
        return;
    }
    let w = a + b;
    if w == 0 {
        return;
    }
    let m = w + 2;
    let ln_pref = (2.0 / m as f64).ln();
    let lead = ln_pref + n as f64 * ln_cos_pi_frac(1, m);
    for r in 1..=m / 2 {
        if 2 * r == m {
            break;
        }
        let ln_lambda = n as f64 * ln_cos_pi_frac(r, m);
        if r > 1 && std::f64::consts::LN_2 + ln_lambda < lead - TRUNCATION_NATS {
            break;
        }
        let mag = (ln_pref + ln_lambda - log_scale).exp();
        if mag == 0.0 {
            break;
        }
        for (j, mirrored) in [(r, false), (m - r, true)] {
            let s_start = sin_pi_frac(j * (a + 1), m);
            if s_start == 0.0 {
                continue;
            }
            let mut c = sign * mag * s_start;
            if mirrored && n % 2 == 1 {
                c = -c;
            }
            for x in -a..=b {
                let s_end = sin_pi_frac(j * (x + a + 1), m);
                out[(x + offset) as usize] += c * s_end;
            }
        }
    }
}
