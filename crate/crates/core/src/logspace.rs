//! Log-domain arithmetic for probabilities and signed sums.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// `log(exp(x) + exp(y))` without overflow. `-inf` is the additive identity.
#[inline]
pub fn log_add_exp(x: f64, y: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return y;
    }
    if y == f64::NEG_INFINITY {
        return x;
    }
    let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
    hi + (lo - hi).exp().ln_1p()
}

/// Max-shifted log-sum-exp, accumulated left to right.
///
/// The order of summation is the slice order, so equal inputs always give a
/// bit-identical result.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let s: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + s.ln()
}

/// Streaming version of [`log_sum_exp`] that rescales when a larger term arrives.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        LogSumExp { max: f64::NEG_INFINITY, sum: 0.0 }
    }

    #[inline]
    pub fn push(&mut self, v: f64) {
        if v == f64::NEG_INFINITY {
            return;
        }
        if v <= self.max {
            self.sum += (v - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - v).exp() + 1.0;
            self.max = v;
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// A probability stored as its natural logarithm; `-inf` encodes zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogProb(pub f64);

impl LogProb {
    pub const ZERO: LogProb = LogProb(f64::NEG_INFINITY);
    pub const ONE: LogProb = LogProb(0.0);

    pub fn from_prob(p: f64) -> Self {
        LogProb(p.ln())
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn prob(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }
}

impl fmt::Display for LogProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "exp({})", self.0)
    }
}

/// A real number stored as `sign * exp(log_abs)`.
///
/// Used for alternating spectral and reflection series whose terms span far
/// more than the double-precision exponent range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    sign: i8,
    log_abs: f64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog { sign: 0, log_abs: f64::NEG_INFINITY };

    pub fn new(sign: i8, log_abs: f64) -> Self {
        if sign == 0 || log_abs == f64::NEG_INFINITY {
            SignedLog::ZERO
        } else {
            SignedLog { sign: sign.signum(), log_abs }
        }
    }

    pub fn from_f64(x: f64) -> Self {
        match x.partial_cmp(&0.0) {
            Some(Ordering::Greater) => SignedLog::new(1, x.ln()),
            Some(Ordering::Less) => SignedLog::new(-1, (-x).ln()),
            _ => SignedLog::ZERO,
        }
    }

    pub fn positive(log_abs: f64) -> Self {
        SignedLog::new(1, log_abs)
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    pub fn log_abs(self) -> f64 {
        self.log_abs
    }

    pub fn to_f64(self) -> f64 {
        f64::from(self.sign) * self.log_abs.exp()
    }

    pub fn neg(self) -> Self {
        SignedLog { sign: -self.sign, log_abs: self.log_abs }
    }

    pub fn mul_log(self, log_factor: f64) -> Self {
        SignedLog::new(self.sign, self.log_abs + log_factor)
    }

    pub fn add(self, other: SignedLog) -> SignedLog {
        if self.sign == 0 {
            return other;
        }
        if other.sign == 0 {
            return self;
        }
        let (big, small) = if self.log_abs >= other.log_abs { (self, other) } else { (other, self) };
        let ratio = (small.log_abs - big.log_abs).exp();
        if big.sign == small.sign {
            SignedLog::new(big.sign, big.log_abs + ratio.ln_1p())
        } else if ratio >= 1.0 {
            SignedLog::ZERO
        } else {
            SignedLog::new(big.sign, big.log_abs + (-ratio).ln_1p())
        }
    }
}

/// Accumulates a signed sum and the log of the sum of absolute values, so a
/// caller can judge how much cancellation the result went through.
#[derive(Debug, Clone, Copy)]
pub struct SignedSum {
    value: SignedLog,
    abs: LogSumExp,
}

impl Default for SignedSum {
    fn default() -> Self {
        Self::new()
    }
}

impl SignedSum {
    pub fn new() -> Self {
        SignedSum { value: SignedLog::ZERO, abs: LogSumExp::new() }
    }

    #[inline]
    pub fn push(&mut self, term: SignedLog) {
        if term.sign() == 0 {
            return;
        }
        self.value = self.value.add(term);
        self.abs.push(term.log_abs());
    }

    pub fn push_log(&mut self, sign: i8, log_abs: f64) {
        self.push(SignedLog::new(sign, log_abs));
    }

    pub fn value(&self) -> SignedLog {
        self.value
    }

    /// `log(sum |terms|)`.
    pub fn log_abs_total(&self) -> f64 {
        self.abs.value()
    }

    /// `log(sum |terms| / |sum|)`: roughly how many nats of relative precision
    /// the cancellation cost. Infinite when the sum vanished.
    pub fn log_condition(&self) -> f64 {
        if self.value.sign() == 0 {
            if self.abs.value() == f64::NEG_INFINITY {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.abs.value() - self.value.log_abs()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_add_exp_handles_identity_and_extremes() {
        assert_eq!(log_add_exp(f64::NEG_INFINITY, -3.0), -3.0);
        assert!((log_add_exp(0.0, 0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((log_add_exp(-1000.0, -1000.0) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn log_sum_exp_matches_linear_sum() {
        let v = [0.1f64, 0.2, 0.3];
        let lv: Vec<f64> = v.iter().map(|x| x.ln()).collect();
        assert!((log_sum_exp(&lv).exp() - 0.6).abs() < 1e-15);
        let mut acc = LogSumExp::new();
        for x in lv {
            acc.push(x);
        }
        assert!((acc.value().exp() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn signed_log_cancellation() {
        let a = SignedLog::from_f64(3.0);
        let b = SignedLog::from_f64(-2.5);
        assert!((a.add(b).to_f64() - 0.5).abs() < 1e-15);
        assert_eq!(a.add(a.neg()), SignedLog::ZERO);
        assert_eq!(SignedLog::ZERO.add(b), b);
    }

    #[test]
    fn signed_sum_reports_condition() {
        let mut s = SignedSum::new();
        s.push(SignedLog::from_f64(1.0));
        s.push(SignedLog::from_f64(-0.999));
        assert!((s.value().to_f64() - 0.001).abs() < 1e-15);
        let cond = s.log_condition().exp();
        assert!((cond - 1.999 / 0.001).abs() < 1e-6);
    }
}
