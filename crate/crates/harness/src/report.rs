use std::time::Duration;

use bco_core::Point;
use serde::Serialize;

use crate::bounds::BoundKind;
use crate::oracle::OracleResult;

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    /// 1-based round index.
    pub t: usize,
    /// Queried point, in the body's original coordinates.
    pub x: Point,
    pub cost: f64,
    pub cum_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub seed: u64,
    pub rounds: Vec<RoundRecord>,
    pub total: f64,
    /// `sum_t c_t(y_t)` at the centers; equals `total` for full-information runs.
    pub center_total: f64,
    pub optimal_total: f64,
    pub regret: f64,
    pub wall_time: Duration,
}

/// Schedule actually used by a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunParams {
    pub n: u64,
    pub d: usize,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "L")]
    pub l: Option<f64>,
    pub eta: f64,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReshapeReport {
    /// Row-major `T` of `x -> T (x - center)`.
    pub matrix: Vec<f64>,
    pub center: Vec<f64>,
    pub max_radius: f64,
    pub min_radius: f64,
    pub inner_radius: f64,
    pub outer_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationSummary {
    pub samples: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialLine {
    pub trial: usize,
    pub seed: u64,
    pub total: f64,
    pub regret: f64,
    pub center_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub mean_regret: f64,
    pub se: f64,
    pub bound: f64,
    pub kind: BoundKind,
    pub params: RunParams,
    pub kappa: Option<f64>,
    pub passed: bool,
    /// `mean + 2 se` for randomized learners, the largest regret otherwise.
    pub compared: f64,
    pub rule: String,
    pub algorithm: String,
    pub adversary: String,
    pub body: String,
    pub trials: Vec<TrialLine>,
    /// Hindsight optimum in original coordinates.
    pub optimum_point: Vec<f64>,
    pub optimum: OracleResult,
    pub reshape: Option<ReshapeReport>,
    pub validation: Option<ValidationSummary>,
}
