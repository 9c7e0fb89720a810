//! Experiment runner for bandit convex optimization.
//!
//! Reads a TOML experiment description, runs seeded trials of a learner
//! against an oblivious cost sequence, computes regret against the hindsight
//! optimum and compares it with the closed-form bound for the schedule.

pub mod bounds;
pub mod config;
mod error;
pub mod oracle;
pub mod report;
pub mod runner;

pub use error::{exit, HarnessError, Result};
