//! Engine results against brute-force references written independently here.

use std::collections::{BTreeMap, HashMap};

use polylab::env::{make_environment, DisorderSpec, Environment};
use polylab::polymer::{log_partition, polymer_endpoint_marginal, polymer_range_marginal, PolymerParams, Window};
use polylab::rates::Exponent;
use polylab::srw_exact::{confined_survival, max_tail, range_endpoint_joint_law, range_joint_law};

/// Law of `(S_n, min, max)` by forward recursion over the walk.
fn walk_states(n: usize) -> HashMap<(i64, i64, i64), f64> {
    let mut cur = HashMap::from([((0i64, 0i64, 0i64), 1.0)]);
    for _ in 0..n {
        let mut next = HashMap::new();
        for (&(s, lo, hi), &p) in &cur {
            for d in [-1, 1] {
                let t = s + d;
                *next.entry((t, lo.min(t), hi.max(t))).or_insert(0.0) += 0.5 * p;
            }
        }
        cur = next;
    }
    cur
}

struct Brute {
    log_z: f64,
    range: BTreeMap<(usize, usize), f64>,
    endpoint: BTreeMap<i64, f64>,
}

fn brute(env: &Environment, params: &PolymerParams) -> Brute {
    let (beta, h) = (params.beta_n(), params.h_n());
    let states = walk_states(params.n);
    let lw = |lo: i64, hi: i64| beta * (lo..=hi).map(|x| env.omega(x)).sum::<f64>() - h * (hi - lo + 1) as f64;
    let shift = states.keys().map(|&(_, lo, hi)| lw(lo, hi)).fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = states.iter().map(|(&(_, lo, hi), &p)| p * (lw(lo, hi) - shift).exp()).sum();
    let mut range = BTreeMap::new();
    let mut endpoint = BTreeMap::new();
    for (&(s, lo, hi), &p) in &states {
        let q = p * (lw(lo, hi) - shift).exp() / z;
        *range.entry(((-lo) as usize, hi as usize)).or_insert(0.0) += q;
        *endpoint.entry(s).or_insert(0.0) += q;
    }
    Brute { log_z: z.ln() + shift, range, endpoint }
}

fn params(alpha: f64, beta: f64, h: f64, gamma: f64, zeta: f64, n: usize) -> PolymerParams {
    PolymerParams::new(alpha, beta, h, Exponent::Value(gamma), Exponent::Value(zeta), n).unwrap()
}

#[test]
fn partition_and_marginals_match_recursion() {
    let cases = [
        (2.0, 0.8, 0.3, 0.0, 0.0, 9usize, 1u64),
        (1.5, 1.2, -0.4, 0.2, 0.0, 12, 2),
        (0.6, 0.3, 0.5, 0.5, 0.5, 14, 3),
        (1.8, 0.0, 1.0, 0.0, -0.5, 11, 4),
        (0.8, 1.0, 0.0, 0.0, 0.0, 13, 5),
    ];
    for (alpha, beta, h, g, z, n, seed) in cases {
        let env = make_environment(DisorderSpec::new(alpha, 0.5, seed).unwrap()).unwrap();
        let p = params(alpha, beta, h, g, z, n);
        let b = brute(&env, &p);
        let lz = log_partition(&env, &p, Window::Auto).unwrap();
        assert!((lz - b.log_z).abs() <= 1e-12 * b.log_z.abs().max(1.0), "{lz} vs {}", b.log_z);
        let marg = polymer_range_marginal(&env, &p).unwrap();
        for (&(a, bb), &q) in &b.range {
            assert!((marg.log_prob(a, bb).prob() - q).abs() < 1e-12, "cell ({a},{bb})");
        }
        let ep = polymer_endpoint_marginal(&env, &p).unwrap();
        for x in -(n as i64)..=n as i64 {
            let q = b.endpoint.get(&x).copied().unwrap_or(0.0);
            assert!((ep.prob(x) - q).abs() < 1e-12, "x={x}");
        }
    }
}

#[test]
fn range_law_matches_recursion() {
    for n in [1usize, 2, 7, 16, 30] {
        let states = walk_states(n);
        let mut cells: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut triples: BTreeMap<(usize, usize, i64), f64> = BTreeMap::new();
        for (&(s, lo, hi), &p) in &states {
            *cells.entry(((-lo) as usize, hi as usize)).or_insert(0.0) += p;
            *triples.entry(((-lo) as usize, hi as usize, s)).or_insert(0.0) += p;
        }
        let law = range_joint_law(n, n, n);
        for a in 0..=n {
            for b in 0..=n {
                let q = cells.get(&(a, b)).copied().unwrap_or(0.0);
                assert!((law.log_prob(a, b).prob() - q).abs() < 1e-14, "n={n} ({a},{b})");
            }
        }
        let joint = range_endpoint_joint_law(n, n, n);
        for (&(a, b, s), &q) in &triples {
            assert!((joint.endpoint_log_prob(a, b, s).prob() - q).abs() < 1e-14);
        }
    }
}

#[test]
fn survival_and_max_tail_match_recursion() {
    for n in [5usize, 20, 41] {
        let states = walk_states(n);
        for a in 0..6usize {
            for b in 0..6usize {
                let q: f64 = states
                    .iter()
                    .filter(|(&(_, lo, hi), _)| lo >= -(a as i64) && hi <= b as i64)
                    .map(|(_, &p)| p)
                    .sum();
                let got = confined_survival(n, a, b).prob();
                assert!((got - q).abs() <= 1e-13 * q.max(1e-300) || (got - q).abs() < 1e-300, "n={n} a={a} b={b}");
            }
        }
        for level in 0..=(n as i64 + 1) {
            let q: f64 = states.iter().filter(|(&(_, _, hi), _)| hi >= level).map(|(_, &p)| p).sum();
            assert!((max_tail(n, level).prob() - q).abs() < 1e-14, "n={n} level={level}");
        }
    }
}

#[test]
fn large_n_window_against_full_sum() {
    // the automatic window must agree with the full cell sum
    let env = make_environment(DisorderSpec::gaussian(11)).unwrap();
    let p = params(2.0, 1.0, 0.5, 0.3, 0.2, 300);
    let auto = log_partition(&env, &p, Window::Auto).unwrap();
    let full = log_partition(&env, &p, Window::Fixed { a_max: 300, b_max: 300 }).unwrap();
    assert!((auto - full).abs() <= 1e-10 * full.abs().max(1.0));
}
