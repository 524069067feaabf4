//! The disorder field `omega`, its partial sums, and the rescaled path coupled
//! to the two-sided limit process.
//!
//! Every site value is a pure function of `(seed, stream, x)`: a ChaCha8
//! keystream is positioned at a word offset derived from `x`, so the field can
//! be queried in any order without materialising it.

use std::sync::RwLock;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Law of a single site: exact Gaussian for `alpha = 2`, signed Pareto otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    pub alpha: f64,
    /// Weight of the positive tail; the negative tail gets `1 - p`.
    pub p: f64,
    pub seed: u64,
}

impl DisorderSpec {
    pub fn new(alpha: f64, p: f64, seed: u64) -> Result<Self> {
        let spec = DisorderSpec { alpha, p, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gaussian(seed: u64) -> Self {
        DisorderSpec { alpha: 2.0, p: 0.5, seed }
    }

    pub fn q(&self) -> f64 {
        1.0 - self.p
    }

    pub fn validate(&self) -> Result<()> {
        validate_alpha(self.alpha)?;
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::param(format!("p must lie in (0,1], got {}", self.p)));
        }
        Ok(())
    }

    /// Mean of the raw signed Pareto draw, removed when `alpha` is in (1,2).
    pub fn centering(&self) -> f64 {
        if self.alpha > 1.0 && self.alpha < 2.0 {
            (self.p - self.q()) * self.alpha / (self.alpha - 1.0)
        } else {
            0.0
        }
    }
}

/// Rejects `alpha = 1` and anything outside `(0, 2]`.
pub fn validate_alpha(alpha: f64) -> Result<()> {
    if alpha == 1.0 {
        return Err(Error::AlphaOne);
    }
    if !(alpha > 0.0 && alpha <= 2.0) || !alpha.is_finite() {
        return Err(Error::param(format!("alpha must lie in (0,1)∪(1,2], got {alpha}")));
    }
    Ok(())
}

/// Prefix sums `plus[j] = sum_{x=0}^{j} omega_x` and
/// `minus[j] = sum_{x=-j}^{-1} omega_x` with `minus[0] = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSums {
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

impl PartialSums {
    pub fn len(&self) -> usize {
        self.plus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plus.is_empty()
    }

    /// `sum of omega over [-a, b]`.
    #[inline]
    pub fn range_sum(&self, a: usize, b: usize) -> f64 {
        self.plus[b] + self.minus[a]
    }
}

#[derive(Debug)]
enum Field {
    Random { spec: DisorderSpec, stream: u64 },
    Explicit { alpha: f64, lo: i64, values: Vec<f64> },
}

#[derive(Debug, Default)]
struct Cache {
    // pos[x] = omega_x for x >= 0; neg[j] = omega_{-(j+1)}.
    pos: Vec<f64>,
    neg: Vec<f64>,
}

/// A realisation of the disorder field.
#[derive(Debug)]
pub struct Environment {
    field: Field,
    cache: RwLock<Cache>,
}

impl Clone for Environment {
    fn clone(&self) -> Self {
        let cache = self.cache.read().expect("environment cache poisoned");
        Environment {
            field: match &self.field {
                Field::Random { spec, stream } => Field::Random { spec: *spec, stream: *stream },
                Field::Explicit { alpha, lo, values } => {
                    Field::Explicit { alpha: *alpha, lo: *lo, values: values.clone() }
                }
            },
            cache: RwLock::new(Cache { pos: cache.pos.clone(), neg: cache.neg.clone() }),
        }
    }
}

/// Builds the random environment described by `spec`.
pub fn make_environment(spec: DisorderSpec) -> Result<Environment> {
    spec.validate()?;
    Ok(Environment::random(spec, 0))
}

#[inline]
fn zigzag(x: i64) -> u64 {
    if x >= 0 {
        2 * x as u64
    } else {
        2 * x.unsigned_abs() - 1
    }
}

#[inline]
fn open_unit(u: u64) -> f64 {
    // (0, 1]
    1.0 - (u >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn half_open_unit(u: u64) -> f64 {
    // [0, 1)
    (u >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn transform(spec: &DisorderSpec, u1: u64, u2: u64) -> f64 {
    if spec.alpha == 2.0 {
        let r = (-2.0 * open_unit(u1).ln()).sqrt();
        r * (std::f64::consts::TAU * half_open_unit(u2)).cos()
    } else {
        let magnitude = open_unit(u1).powf(-1.0 / spec.alpha);
        let signed = if half_open_unit(u2) < spec.p { magnitude } else { -magnitude };
        signed - spec.centering()
    }
}

impl Environment {
    fn random(spec: DisorderSpec, stream: u64) -> Self {
        Environment { field: Field::Random { spec, stream }, cache: RwLock::new(Cache::default()) }
    }

    /// Same law and seed, independent keystream. Used for Monte Carlo replicates.
    pub fn with_stream(spec: DisorderSpec, stream: u64) -> Result<Self> {
        spec.validate()?;
        Ok(Environment::random(spec, stream))
    }

    /// A deterministic field with `omega_{lo + i} = values[i]`; sites outside the
    /// table read as zero. `alpha` only sets the scaling of [`Environment::coupled_path`].
    pub fn from_values(alpha: f64, lo: i64, values: Vec<f64>) -> Result<Self> {
        validate_alpha(alpha)?;
        Ok(Environment { field: Field::Explicit { alpha, lo, values }, cache: RwLock::new(Cache::default()) })
    }

    /// Copy of this field on `[-half_width, half_width]` made reflection symmetric
    /// (`omega_{-x} = omega_x`).
    pub fn symmetrized(&self, half_width: usize) -> Self {
        let h = half_width as i64;
        let values = (-h..=h).map(|x| self.omega(x.abs())).collect();
        Environment {
            field: Field::Explicit { alpha: self.alpha(), lo: -h, values },
            cache: RwLock::new(Cache::default()),
        }
    }

    pub fn alpha(&self) -> f64 {
        match &self.field {
            Field::Random { spec, .. } => spec.alpha,
            Field::Explicit { alpha, .. } => *alpha,
        }
    }

    pub fn spec(&self) -> Option<DisorderSpec> {
        match &self.field {
            Field::Random { spec, .. } => Some(*spec),
            Field::Explicit { .. } => None,
        }
    }

    fn draw(&self, x: i64) -> f64 {
        match &self.field {
            Field::Random { spec, stream } => {
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
                rng.set_stream(*stream);
                rng.set_word_pos(4 * u128::from(zigzag(x)));
                let u1 = rng.next_u64();
                let u2 = rng.next_u64();
                transform(spec, u1, u2)
            }
            Field::Explicit { lo, values, .. } => {
                let i = x - lo;
                if i >= 0 && (i as usize) < values.len() {
                    values[i as usize]
                } else {
                    0.0
                }
            }
        }
    }

    /// Makes sure sites `-reach..=reach` are cached.
    fn ensure(&self, reach: usize) {
        {
            let cache = self.cache.read().expect("environment cache poisoned");
            if cache.pos.len() > reach && cache.neg.len() >= reach {
                return;
            }
        }
        let mut cache = self.cache.write().expect("environment cache poisoned");
        if cache.pos.len() > reach && cache.neg.len() >= reach {
            return;
        }
        match &self.field {
            Field::Random { spec, stream } => {
                // Sites are interleaved 0, -1, 1, -2, 2, ... in the keystream, so a
                // sequential read fills both sides at once.
                let mut z = (2 * cache.pos.len() as u64).min(2 * cache.neg.len() as u64 + 1);
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
                rng.set_stream(*stream);
                rng.set_word_pos(4 * u128::from(z));
                let target = 2 * reach as u64;
                while z <= target {
                    let u1 = rng.next_u64();
                    let u2 = rng.next_u64();
                    let v = transform(spec, u1, u2);
                    if z % 2 == 0 {
                        let x = (z / 2) as usize;
                        if x == cache.pos.len() {
                            cache.pos.push(v);
                        }
                    } else {
                        let j = ((z + 1) / 2 - 1) as usize;
                        if j == cache.neg.len() {
                            cache.neg.push(v);
                        }
                    }
                    z += 1;
                }
            }
            Field::Explicit { .. } => {
                while cache.pos.len() <= reach {
                    let x = cache.pos.len() as i64;
                    let v = self.draw(x);
                    cache.pos.push(v);
                }
                while cache.neg.len() < reach {
                    let x = -(cache.neg.len() as i64) - 1;
                    let v = self.draw(x);
                    cache.neg.push(v);
                }
            }
        }
    }

    /// The disorder value at site `x`.
    pub fn omega(&self, x: i64) -> f64 {
        {
            let cache = self.cache.read().expect("environment cache poisoned");
            if x >= 0 {
                if let Some(&v) = cache.pos.get(x as usize) {
                    return v;
                }
            } else if let Some(&v) = cache.neg.get((-x - 1) as usize) {
                return v;
            }
        }
        self.draw(x)
    }

    /// Prefix sums up to index `ell` on both sides.
    pub fn partial_sums(&self, ell: usize) -> PartialSums {
        self.ensure(ell);
        let cache = self.cache.read().expect("environment cache poisoned");
        let mut plus = Vec::with_capacity(ell + 1);
        let mut minus = Vec::with_capacity(ell + 1);
        let mut acc = 0.0;
        for &v in &cache.pos[..=ell] {
            acc += v;
            plus.push(acc);
        }
        minus.push(0.0);
        let mut acc = 0.0;
        for &v in &cache.neg[..ell] {
            acc += v;
            minus.push(acc);
        }
        PartialSums { plus, minus }
    }

    /// `max_j |Omega^-_j| + max_j |Omega^+_j|` over `0 <= j <= ell`.
    pub fn omega_star(&self, ell: usize) -> f64 {
        omega_star_of(&self.partial_sums(ell))
    }

    /// `X^{(n)}_t`: `n^{-1/alpha} Omega^+_{floor(tn)}` for `t >= 0` and
    /// `-n^{-1/alpha} Omega^-_{floor(|t|n)}` for `t < 0`.
    pub fn coupled_path(&self, n: usize, t: f64) -> f64 {
        assert!(n >= 1, "coupled_path needs n >= 1");
        let k = (t.abs() * n as f64).floor() as usize;
        let sums = self.partial_sums(k);
        let scale = path_scale(n as f64, self.alpha());
        if t >= 0.0 {
            scale * sums.plus[k]
        } else {
            -scale * sums.minus[k]
        }
    }
}

/// `n^{-1/alpha}`. Kept out of line so every caller gets the same rounding
/// whether or not the arguments are known at compile time.
#[inline(never)]
pub fn path_scale(n: f64, alpha: f64) -> f64 {
    n.powf(-1.0 / alpha)
}

pub(crate) fn omega_star_of(sums: &PartialSums) -> f64 {
    let m = sums.minus.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let p = sums.plus.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    m + p
}

/// Monte Carlo estimate of `P(Omega*_ell > T)` with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub probability: f64,
    pub std_error: f64,
    pub reps: usize,
}

/// Estimates the maximal-sum tail over `reps` independent replicates of the field.
///
/// Replicate `r` uses keystream `r` of `spec.seed`.
pub fn tail_bound_estimate(spec: DisorderSpec, ell: usize, threshold: f64, reps: usize) -> Result<TailEstimate> {
    let exceed = tail_exceedances(spec, ell, &[threshold], reps)?;
    Ok(exceed[0])
}

/// Like [`tail_bound_estimate`] but for several thresholds on the same replicates.
pub fn tail_exceedances(spec: DisorderSpec, ell: usize, thresholds: &[f64], reps: usize) -> Result<Vec<TailEstimate>> {
    use rayon::prelude::*;
    spec.validate()?;
    if reps < 100 {
        return Err(Error::param(format!("tail estimate needs at least 100 replicates, got {reps}")));
    }
    let stars: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|r| Environment::random(spec, r).omega_star(ell))
        .collect();
    Ok(thresholds
        .iter()
        .map(|&t| {
            let hits = stars.iter().filter(|&&s| s > t).count();
            let p = hits as f64 / reps as f64;
            TailEstimate { probability: p, std_error: (p * (1.0 - p) / reps as f64).sqrt(), reps }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hand_env() -> Environment {
        Environment::from_values(2.0, -2, vec![1.0, -1.0, 2.0, 0.0, 3.0]).unwrap()
    }

    #[test]
    fn alpha_one_and_out_of_range_rejected() {
        assert!(matches!(DisorderSpec::new(1.0, 0.5, 1), Err(Error::AlphaOne)));
        assert!(DisorderSpec::new(2.5, 0.5, 1).is_err());
        assert!(DisorderSpec::new(0.0, 0.5, 1).is_err());
        assert!(DisorderSpec::new(1.5, 0.0, 1).is_err());
        assert!(DisorderSpec::new(1.5, 1.0, 1).is_ok());
    }

    #[test]
    fn centering_constants() {
        assert_eq!(DisorderSpec::new(1.5, 0.5, 0).unwrap().centering(), 0.0);
        assert!((DisorderSpec::new(1.5, 1.0, 0).unwrap().centering() - 3.0).abs() < 1e-15);
        assert_eq!(DisorderSpec::new(0.5, 1.0, 0).unwrap().centering(), 0.0);
        assert_eq!(DisorderSpec::gaussian(0).centering(), 0.0);
    }

    #[test]
    fn partial_sums_by_hand() {
        let env = hand_env();
        let s0 = env.partial_sums(0);
        assert_eq!(s0.plus, vec![2.0]);
        assert_eq!(s0.minus, vec![0.0]);
        let s = env.partial_sums(2);
        assert_eq!(s.plus, vec![2.0, 2.0, 5.0]);
        assert_eq!(s.minus, vec![0.0, -1.0, 0.0]);
        assert_eq!(env.omega_star(2), 6.0);
        assert_eq!(env.omega_star(0), 2.0);
    }

    #[test]
    fn deterministic_and_order_independent() {
        let spec = DisorderSpec::new(1.5, 0.7, 42).unwrap();
        let a = make_environment(spec).unwrap();
        let b = make_environment(spec).unwrap();
        let forward: Vec<f64> = (-50..50).map(|x| a.omega(x)).collect();
        let backward: Vec<f64> = (-50..50).rev().map(|x| b.omega(x)).collect();
        let backward: Vec<f64> = backward.into_iter().rev().collect();
        assert_eq!(forward, backward);
        // Bulk fill agrees with single-site draws.
        let c = make_environment(spec).unwrap();
        let sums = c.partial_sums(49);
        let mut acc = 0.0;
        for x in 0..50 {
            acc += a.omega(x);
            assert_eq!(sums.plus[x as usize], acc);
        }
        assert_eq!(c.omega(-7), a.omega(-7));
    }

    #[test]
    fn streams_differ() {
        let spec = DisorderSpec::gaussian(3);
        let a = Environment::with_stream(spec, 0).unwrap();
        let b = Environment::with_stream(spec, 1).unwrap();
        assert_ne!(a.omega(0), b.omega(0));
    }

    #[test]
    fn incremental_extension_reuses_values() {
        let env = make_environment(DisorderSpec::gaussian(9)).unwrap();
        let short = env.partial_sums(10);
        let long = env.partial_sums(100);
        assert_eq!(&long.plus[..=10], &short.plus[..]);
        assert_eq!(&long.minus[..=10], &short.minus[..]);
        for l in 0..100 {
            let step = long.plus[l + 1] - long.plus[l];
            assert!((step - env.omega(l as i64 + 1)).abs() <= 1e-12 * (1.0 + long.plus[l].abs()));
        }
    }

    #[test]
    fn omega_star_monotone() {
        let env = make_environment(DisorderSpec::new(0.7, 0.4, 5).unwrap()).unwrap();
        let mut prev = 0.0;
        for l in 0..200 {
            let s = env.omega_star(l);
            assert!(s >= prev);
            prev = s;
        }
    }

    #[test]
    fn coupled_path_is_rescaled_partial_sum() {
        let env = make_environment(DisorderSpec::new(1.5, 0.5, 11).unwrap()).unwrap();
        let n = 64;
        let sums = env.partial_sums(3 * n);
        let scale = path_scale(n as f64, env.alpha());
        assert_eq!(env.coupled_path(n, 0.0), scale * env.omega(0));
        for k in 0..3 * n {
            let t = k as f64 / n as f64;
            assert_eq!(env.coupled_path(n, t), scale * sums.plus[k]);
            if k > 0 {
                assert_eq!(env.coupled_path(n, -t), -scale * sums.minus[k]);
            }
        }
        // X_v - X_u for u < 0 <= v.
        let (u, v) = (-0.5, 1.25);
        let lhs = env.coupled_path(n, v) - env.coupled_path(n, u);
        let rhs = scale * (sums.plus[80] + sums.minus[32]);
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn gaussian_moments() {
        let env = make_environment(DisorderSpec::gaussian(2024)).unwrap();
        let n = 1_000_000usize;
        let sums = env.partial_sums(n / 2);
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        let mut count = 0.0;
        for j in 0..=n / 2 {
            let v = if j == 0 { sums.plus[0] } else { sums.plus[j] - sums.plus[j - 1] };
            s1 += v;
            s2 += v * v;
            count += 1.0;
            if j > 0 {
                let w = sums.minus[j] - sums.minus[j - 1];
                s1 += w;
                s2 += w * w;
                count += 1.0;
            }
        }
        let mean = s1 / count;
        let var = s2 / count;
        assert!(mean.abs() < 3.0 / count.sqrt(), "mean {mean}");
        // Var of the sample second moment is 2/n for a standard Gaussian.
        assert!((var - 1.0).abs() < 3.0 * (2.0 / count).sqrt(), "second moment {var}");
    }

    #[test]
    fn pareto_raw_tail_is_exact() {
        // Empirical CDF of |omega| (no centering for alpha < 1) against t^{-alpha}.
        let spec = DisorderSpec::new(0.6, 0.3, 77).unwrap();
        let env = make_environment(spec).unwrap();
        let n = 200_000;
        let mut mags: Vec<f64> = (0..n).map(|x| env.omega(x as i64).abs()).collect();
        mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ks: f64 = 0.0;
        for (i, &m) in mags.iter().enumerate() {
            let cdf = 1.0 - m.powf(-0.6);
            ks = ks.max((cdf - i as f64 / n as f64).abs()).max((cdf - (i + 1) as f64 / n as f64).abs());
        }
        assert!(ks < 1.63 / (n as f64).sqrt(), "KS {ks}");
        let positive = (0..n).filter(|&x| env.omega(x as i64) > 0.0).count() as f64 / n as f64;
        assert!((positive - 0.3).abs() < 4.0 * (0.21f64 / n as f64).sqrt());
    }

    #[test]
    fn centered_pareto_mean() {
        // alpha=1.5, p=1: raw mean 3 is removed. The sample mean of a
        // heavy-tailed law converges slowly, so the band is generous.
        let spec = DisorderSpec::new(1.5, 1.0, 8).unwrap();
        let env = make_environment(spec).unwrap();
        let n = 10_000_000usize;
        let sums = env.partial_sums(n);
        let mean = sums.plus[n - 1] / n as f64;
        assert!(mean.abs() < 0.05, "mean {mean}");
        for x in 0..1000 {
            assert!(env.omega(x) >= 1.0 - 3.0);
        }
    }

    #[test]
    fn tail_estimate_vanishes_at_large_threshold() {
        let spec = DisorderSpec::new(1.5, 0.5, 1).unwrap();
        let est = tail_bound_estimate(spec, 4, 1e12, 1000).unwrap();
        assert_eq!(est.probability, 0.0);
        assert!(tail_bound_estimate(spec, 4, 1.0, 10).is_err());
    }
}
