//! Likelihood-free Bayesian inference with adaptive tolerances.
//!
//! Simulated and observed data are compared through a trimmed, marginally
//! augmented sliced Wasserstein distance whose quantiles come from a neural
//! network. Across iterations the acceptance threshold shrinks while new
//! parameters are proposed from a Gaussian mixture fitted to the last
//! accepted draws.

// negated comparisons are how validation rejects NaN alongside bad values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod abi;
pub mod baselines;
pub mod cli;
pub mod error;
pub mod gmm;
pub mod io;
pub mod models;
pub mod msw;
pub mod nn;
pub mod quantile;
pub mod seed;

pub use error::{Error, Result};

/// One simulated `(θ, x)` pair; `data` is the flattened simulator output.
#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub theta: Vec<f64>,
    pub data: Vec<f64>,
}
