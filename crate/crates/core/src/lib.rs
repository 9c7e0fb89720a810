//! Bandit convex optimization with one-point gradient estimates.
//!
//! The learner plays a point `x_t` in a convex body each round and only sees
//! the scalar cost `c_t(x_t)`. Perturbing a center point along a random unit
//! direction and scaling the direction by the observed cost gives an unbiased
//! gradient estimate of a smoothed version of the cost, which is then fed to
//! projected gradient descent on a slightly shrunk copy of the body.
//!
//! Module map:
//!
//! - [`geometry`]: convex bodies with projection and membership oracles.
//! - [`sampling`]: seeded random streams, uniform sphere and ball draws.
//! - [`estimator`]: one-point gradient estimates, smoothed values, Spall's estimate.
//! - [`descent`]: projected (expected) gradient descent.
//! - [`bgd`]: the bandit gradient descent state machine and its parameter schedules.
//! - [`reshape`]: uniform sampling of bodies and sample-covariance whitening.
//! - [`adversary`]: oblivious cost sequences with declared bounds.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversary;
pub mod bgd;
pub mod descent;
mod error;
pub mod estimator;
pub mod function;
pub mod geometry;
pub mod reshape;
pub mod sampling;
mod stats;

pub use error::{Error, Result};
pub use stats::MeanAccumulator;

/// A point (or vector) in `R^d`.
pub type Point = nalgebra::DVector<f64>;

/// Absolute slack used for boundary membership and inequality checks.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
