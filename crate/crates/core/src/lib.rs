//! Exact sieve counts and analytic predictions for the weighted
//! distribution of ω(n−1) over integers `n` with exactly `k` distinct prime
//! factors.
//!
//! * [`sieve`] builds the ω(n), ω(n, w) table every count is read from.
//! * [`constants`] evaluates Φ, Γ and the Euler products that enter the
//!   predicted main terms, with truncation-tail bounds.
//! * [`genfun`] holds the generating function `F_k(z)`, its coefficient
//!   extraction, the multiplicative functions behind it and the
//!   characteristic-function profile.
//! * [`stats`] turns the table into weighted statistics and pairs each with
//!   its predicted value.

// `!(v > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod genfun;
pub mod primes;
pub mod sieve;
pub mod stats;
pub mod summation;

pub use constants::{EulerProductResult, RParameter};
pub use genfun::{CoefficientVector, GenFunValue, GzSpec};
pub use num_complex::Complex64;
pub use sieve::{build_omega_table, OmegaTable, SieveConfig, SieveError};
pub use stats::{PredictionReport, ShiftCount, ShiftProfile, ThresholdSpec};
