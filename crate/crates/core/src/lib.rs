//! Law of a refracted Lévy process at an independent exponential time.
//!
//! The refracted process solves `U_t = X_t - δ ∫_0^t 1{U_s > b} ds`. Its law at
//! `e(q)` is assembled from the Wiener-Hopf factors of `X` and `Y = X - δt`
//! and checked against a Monte Carlo simulation of the same equation.

// `!(x > 0.0)` style guards deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approximation;
pub mod error;
pub mod exec;
pub mod grid;
pub mod kernels;
pub mod levy_models;
pub mod model_file;
pub mod monte_carlo;
pub mod numeric;
pub mod potential;
pub mod roots;
pub mod wiener_hopf;

pub use error::{Error, Result};
pub use exec::Execution;
