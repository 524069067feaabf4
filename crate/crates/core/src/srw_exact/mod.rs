//! Exact simple-random-walk computations: confined survival, the joint law of
//! the running extremes (optionally with the endpoint), and maximum tails.

mod binomial;
mod confined;
mod range_law;

pub use crate::logspace::{LogProb, SignedLog};
pub use binomial::{log_binom_half, log_endpoint_pmf, log_endpoint_tail, max_tail, WalkTables};
pub use confined::{
    confined_endpoint_dp, confined_survival, confined_survival_dp, confined_survival_spectral, SPECTRAL_CROSSOVER,
};
pub use range_law::{
    feasible, feasible_b_max, range_endpoint_joint_law, range_joint_law, CellValue, Method, RangeEngine, RangeLaw,
    Route, ScaledVec, DP_MAX_N,
};

/// `P(M_N^- >= -a, M_N^+ <= b)` for real levels, rounded onto the lattice.
pub fn confinement_probability(n: usize, lower: f64, upper: f64) -> LogProb {
    let a = (-lower).floor();
    let b = upper.floor();
    if a < 0.0 || b < 0.0 {
        return LogProb::ZERO;
    }
    confined_survival(n, a as usize, b as usize)
}

/// `P(M_N^+ >= level)` for a real level, rounded up onto the lattice.
pub fn max_tail_real(n: usize, level: f64) -> LogProb {
    max_tail(n, level.ceil() as i64)
}
