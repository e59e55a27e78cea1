//! Normalized integrated fractional Brownian motion (nifBm): exact
//! covariances, Cholesky simulation, drift and Hurst/scale estimators,
//! their asymptotic covariances, and a Monte Carlo experiment harness.
//!
//! nifBm with window `h` is the moving average `X_t = (1/h) ∫_t^{t+h} W_u du`
//! of a fractional Brownian motion `W`; see [`covariance`].

// `!(x > 0.0)` is used deliberately so that NaN fails positivity checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod covariance;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod linalg;
pub mod simulation;

pub use covariance::{Aggregation, HurstIndex, MixedParams, NifbmParams, NoiseModel};
pub use error::{Error, Result};
