//! Simulation and verification toolkit for the power variations of
//! fractional Brownian motion in Brownian time, `Z = X ∘ Y`.
//!
//! The crate is organised bottom-up:
//!
//! - [`gaussian`]: exact fGn / fBm sampling and the increment covariance.
//! - [`hermite`]: Hermite polynomials and monomial-to-Hermite coefficients.
//! - [`walk`]: the dyadic stopping-time walk, crossing counts, Brownian
//!   paths and local-time estimators.
//! - [`variation`]: the Hermite and power variation statistics.
//! - [`limits`]: limit constants and limit-process simulators.
//! - [`experiment`]: the Monte-Carlo harness and report emission.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod gaussian;
pub mod hermite;
pub mod limits;
pub mod numeric;
pub mod rng;
pub mod variation;
pub mod walk;

pub use error::{Error, Result};
pub use gaussian::{rho, FgnPath, HurstParameter, PointSet};
