//! Endpoint law of the simple random walk and the exact tail of its maximum.

use crate::logspace::{log_add_exp, LogProb, LogSumExp};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `ln(n!) - (n + 1/2) ln n + n - ln sqrt(2 pi)`.
fn stirlerr(n: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15 {
        // 15! < 2^53, so the factorial is exact before the logarithm.
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        let nf = n as f64;
        return fact.ln() - (nf + 0.5) * nf.ln() + nf - 0.5 * LN_2PI;
    }
    let nf = n as f64;
    let nn = nf * nf;
    if n > 500 {
        (S0 - S1 / nn) / nf
    } else if n > 80 {
        (S0 - (S1 - S2 / nn) / nn) / nf
    } else if n > 35 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / nf
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / nf
    }
}

/// Deviance term `x ln(x/np) + np - x`, accurate when `x` is close to `np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

fn binomial_u64(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut c: u64 = 1;
    for i in 0..k {
        // Exact: c * (n - i) is divisible by (i + 1) at every step.
        c = c * (n - i) / (i + 1);
    }
    c
}

/// `ln( C(n,k) 2^{-n} )`, the log-probability of `k` up-steps in `n` fair steps.
pub fn log_binom_half(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if k == 0 || k == n {
        return -(n as f64) * std::f64::consts::LN_2;
    }
    if n <= 60 {
        return (binomial_u64(n, k) as f64).ln() - n as f64 * std::f64::consts::LN_2;
    }
    let (nf, kf) = (n as f64, k as f64);
    let half = 0.5 * nf;
    let lc = stirlerr(n) - stirlerr(k) - stirlerr(n - k) - bd0(kf, half) - bd0(nf - kf, half);
    let lf = LN_2PI + kf.ln() + (-kf / nf).ln_1p();
    lc - 0.5 * lf
}

/// `ln P(S_n = x)`.
pub fn log_endpoint_pmf(n: u64, x: i64) -> f64 {
    let s = x + n as i64;
    if s < 0 || s % 2 != 0 || s > 2 * n as i64 {
        return f64::NEG_INFINITY;
    }
    log_binom_half(n, (s / 2) as u64)
}

/// `ln P(S_n >= x)` by summing from the threshold outwards until the terms are
/// negligible. Cost grows with `sqrt(n)` only near the centre.
pub fn log_endpoint_tail(n: u64, x: i64) -> f64 {
    let ni = n as i64;
    if x > ni {
        return f64::NEG_INFINITY;
    }
    if x <= -ni {
        return 0.0;
    }
    if x <= 0 {
        // Complement is small and positive; compute it directly for accuracy.
        let below = log_endpoint_tail(n, -x + 1);
        return (-below.exp()).ln_1p();
    }
    let k0 = ((x + ni + 1) / 2) as u64;
    let mut acc = LogSumExp::new();
    let mut k = k0;
    while k <= n {
        let t = log_binom_half(n, k);
        acc.push(t);
        if t < acc.value() - 45.0 {
            break;
        }
        k += 1;
    }
    acc.value()
}

/// `P(max_{m <= n} S_m >= level)` by the reflection principle.
pub fn max_tail(n: usize, level: i64) -> LogProb {
    LogProb(log_max_tail(n as u64, level))
}

pub(crate) fn log_max_tail(n: u64, level: i64) -> f64 {
    if level <= 0 {
        return 0.0;
    }
    if level > n as i64 {
        return f64::NEG_INFINITY;
    }
    log_add_exp(log_endpoint_tail(n, level), log_endpoint_tail(n, level + 1))
}

/// Dense tables of the endpoint pmf, its upper tail and the maximum tail for a
/// fixed walk length.
#[derive(Debug, Clone)]
pub struct WalkTables {
    n: usize,
    // index x + n for x in [-n, n]
    log_pmf: Vec<f64>,
    // index x + n for x in [-n, n + 1]: ln P(S_n >= x)
    log_tail: Vec<f64>,
}

impl WalkTables {
    pub fn new(n: usize) -> Self {
        let ni = n as i64;
        let log_pmf: Vec<f64> = (-ni..=ni).map(|x| log_endpoint_pmf(n as u64, x)).collect();
        let mut log_tail = vec![f64::NEG_INFINITY; 2 * n + 2];
        let mut acc = f64::NEG_INFINITY;
        for i in (0..=2 * n).rev() {
            acc = log_add_exp(acc, log_pmf[i]);
            log_tail[i] = acc;
        }
        // The upper half is summed from the far tail and is accurate; the lower
        // half is replaced by one minus the complementary tail.
        for x in -ni..=0 {
            let i = (x + ni) as usize;
            let comp = log_tail[(1 - x + ni) as usize];
            log_tail[i] = (-comp.exp()).ln_1p();
        }
        WalkTables { n, log_pmf, log_tail }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn log_pmf(&self, x: i64) -> f64 {
        let i = x + self.n as i64;
        if i < 0 || i > 2 * self.n as i64 {
            f64::NEG_INFINITY
        } else {
            self.log_pmf[i as usize]
        }
    }

    /// Largest value of the pmf.
    pub fn log_pmf_mode(&self) -> f64 {
        let n = self.n as i64;
        self.log_pmf(n % 2)
    }

    #[inline]
    pub fn log_tail_ge(&self, x: i64) -> f64 {
        let i = x + self.n as i64;
        if i <= 0 {
            0.0
        } else if i > 2 * self.n as i64 {
            f64::NEG_INFINITY
        } else {
            self.log_tail[i as usize]
        }
    }

    /// `ln P(M_n^+ >= level)`.
    #[inline]
    pub fn log_max_tail(&self, level: i64) -> f64 {
        if level <= 0 {
            0.0
        } else if level > self.n as i64 {
            f64::NEG_INFINITY
        } else {
            log_add_exp(self.log_tail_ge(level), self.log_tail_ge(level + 1))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::ln_gamma;

    fn enumerate_max(n: usize) -> Vec<u64> {
        // counts[m] = number of paths whose running maximum is exactly m
        let mut counts = vec![0u64; n + 1];
        for mask in 0u64..(1 << n) {
            let (mut s, mut m) = (0i64, 0i64);
            for i in 0..n {
                s += if mask >> i & 1 == 1 { 1 } else { -1 };
                m = m.max(s);
            }
            counts[m as usize] += 1;
        }
        counts
    }

    #[test]
    fn stirlerr_small_matches_gamma() {
        for n in 1..=40u64 {
            let nf = n as f64;
            let direct = ln_gamma(nf + 1.0) - (nf + 0.5) * nf.ln() + nf - 0.5 * LN_2PI;
            assert!((stirlerr(n) - direct).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn pmf_normalised_and_matches_gamma() {
        for n in [61u64, 100, 1001, 50_000] {
            let lse: Vec<f64> = (0..=n).map(|k| log_binom_half(n, k)).collect();
            let total = crate::logspace::log_sum_exp(&lse);
            assert!(total.abs() < 1e-13, "n={n} total={total}");
            for k in [1, n / 3, n / 2, n - 2] {
                let g = ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
                    - n as f64 * std::f64::consts::LN_2;
                assert!((log_binom_half(n, k) - g).abs() < 1e-9 * (1.0 + g.abs()));
            }
        }
    }

    #[test]
    fn max_tail_small_cases() {
        assert_eq!(max_tail(10, 0).ln(), 0.0);
        assert!((max_tail(10, 10).ln() - (-10.0 * std::f64::consts::LN_2)).abs() < 1e-14);
        assert!(max_tail(10, 11).is_zero());
        let counts = enumerate_max(10);
        let ge4: u64 = counts[4..].iter().sum();
        let exact = ge4 as f64 / 1024.0;
        assert!((max_tail(10, 4).prob() - exact).abs() < 1e-15);
    }

    #[test]
    fn tables_agree_with_streaming() {
        let t = WalkTables::new(300);
        for m in [-5i64, 0, 1, 7, 40, 120, 299, 300, 301] {
            let a = t.log_max_tail(m);
            let b = log_max_tail(300, m);
            assert!(a == b || (a - b).abs() < 1e-12 * (1.0 + a.abs()), "m={m} {a} {b}");
        }
        for x in [-300i64, -17, 0, 1, 2, 150] {
            let a = t.log_tail_ge(x);
            let b = log_endpoint_tail(300, x);
            assert!(a == b || (a - b).abs() < 1e-12 * (1.0 + a.abs()), "x={x} {a} {b}");
        }
    }
}
