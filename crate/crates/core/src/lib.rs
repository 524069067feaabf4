//! Exact desk-scale computations for a simple random walk on `Z` whose law is
//! reweighted by `exp(sum over the range of (beta_N * omega_x - h_N))`.
//!
//! The Gibbs weight of a trajectory only depends on its leftmost and
//! rightmost points, so every partition function reduces to a finite sum over
//! `(min, max)` cells weighted by the exact law of the walk's extremes. The
//! crate is organised bottom-up:
//!
//! * [`env`] draws the disorder field and its partial sums.
//! * [`srw_exact`] computes the exact law of the extremes (and endpoint).
//! * [`polymer`] assembles partition functions and polymer marginals.
//! * [`rates`] holds the closed-form rate functions and the phase classifier.
//! * [`varsolve`] solves the limiting variational problems on coupled paths.
//! * [`scaling`] runs sweeps, fits exponents, and hosts the validation batteries.
//! * [`cli`] is the command-line surface.

pub mod cli;
pub mod env;
mod error;
pub mod logspace;
pub mod polymer;
pub mod rates;
pub mod scaling;
pub mod srw_exact;
pub mod varsolve;

pub use error::{Error, Result};
