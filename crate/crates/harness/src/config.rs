//! Experiment configuration, read from TOML.
//!
//! ```toml
//! [body]
//! shape = "ball"          # ball | box | simplex | ellipsoid
//! dim = 2
//! radius = 1.0
//!
//! [adversary]
//! name = "fixed-quadratic"
//! target = [0.3, -0.2]
//! cost_bound = 1.0
//!
//! [algorithm]
//! name = "bgd-general"
//! horizon = 10000
//!
//! [trials]
//! base_seed = 1
//! count = 30
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bco_core::adversary::{CostSequence, DirectionSchedule};
use bco_core::geometry::ConvexBody;
use bco_core::Point;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::oracle::OracleOptions;

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub body: BodyConfig,
    pub adversary: AdversaryConfig,
    pub algorithm: AlgorithmConfig,
    pub trials: TrialsConfig,
    #[serde(default)]
    pub reshape: ReshapeConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub validate: ValidateConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BodyConfig {
    pub shape: String,
    pub dim: usize,
    pub radius: Option<f64>,
    pub half_width: Option<f64>,
    pub half_widths: Option<Vec<f64>>,
    /// Rows of the positive definite matrix `A` in `x^T A x <= 1`.
    pub matrix: Option<Vec<Vec<f64>>>,
    /// Diagonal stretch applied after construction.
    pub stretch: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AdversaryConfig {
    pub name: String,
    /// Quadratic curvature `s`; exclusive with `cost_bound`.
    pub scale: Option<f64>,
    /// Linear magnitude `a`; exclusive with `cost_bound`.
    pub magnitude: Option<f64>,
    /// Rescales the sequence so its declared `C` equals this value.
    pub cost_bound: Option<f64>,
    pub target: Option<Vec<f64>>,
    pub direction: Option<Vec<f64>>,
    pub turns: Option<f64>,
    pub early: Option<Vec<f64>>,
    pub late: Option<Vec<f64>>,
    /// First round (0-based) of the late phase; defaults to `n / 2`.
    pub switch_round: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    BgdGeneral,
    BgdLipschitz,
    OgdFullInfo,
    SpallBgd,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::BgdGeneral,
        Algorithm::BgdLipschitz,
        Algorithm::OgdFullInfo,
        Algorithm::SpallBgd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::BgdGeneral => "bgd-general",
            Algorithm::BgdLipschitz => "bgd-lipschitz",
            Algorithm::OgdFullInfo => "ogd-full-info",
            Algorithm::SpallBgd => "spall-bgd",
        }
    }

    /// Whether the learner draws random perturbations.
    pub fn is_stochastic(self) -> bool {
        !matches!(self, Algorithm::OgdFullInfo)
    }
}

impl FromStr for Algorithm {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub name: Algorithm,
    pub horizon: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TrialsConfig {
    pub seeds: Option<Vec<u64>>,
    pub base_seed: Option<u64>,
    pub count: Option<usize>,
}

impl TrialsConfig {
    /// The seed list, sorted. Duplicates and empty lists are config errors.
    pub fn resolve(&self) -> Result<Vec<u64>> {
        let mut seeds = match (&self.seeds, self.base_seed, self.count) {
            (Some(seeds), None, None) => seeds.clone(),
            (None, base, Some(count)) => {
                let base = base.unwrap_or(0);
                (0..count as u64)
                    .map(|i| {
                        base.checked_add(i)
                            .ok_or_else(|| HarnessError::Config("seed range overflows u64".into()))
                    })
                    .collect::<Result<_>>()?
            }
            (None, _, None) => {
                return Err(HarnessError::Config(
                    "trials: give `seeds` or `count`".into(),
                ));
            }
            (Some(_), _, _) => {
                return Err(HarnessError::Config(
                    "trials: `seeds` excludes `base_seed` and `count`".into(),
                ));
            }
        };
        if seeds.is_empty() {
            return Err(HarnessError::Config(
                "at least one trial is required".into(),
            ));
        }
        seeds.sort_unstable();
        if seeds.windows(2).any(|w| w[0] == w[1]) {
            return Err(HarnessError::Config("duplicate seeds".into()));
        }
        Ok(seeds)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReshapeConfig {
    pub enabled: bool,
    /// Samples for the covariance estimate; at least `1000 d^2`.
    pub samples: usize,
    /// Samples for the outer radius measurement.
    pub radius_samples: usize,
    /// Boundary probes for the inner radius measurement.
    pub directions: usize,
    pub seed: u64,
}

impl Default for ReshapeConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            samples: 100_000,
            radius_samples: 100_000,
            directions: 2_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Also write `points.csv` with every queried point.
    pub points: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            points: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateConfig {
    pub samples: usize,
    pub seed: u64,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            samples: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub restarts: usize,
    pub tolerance: f64,
    pub grid_points: usize,
    pub grid: bool,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        let o = OracleOptions::default();
        Self {
            restarts: o.restarts,
            tolerance: o.tolerance,
            grid_points: o.grid_points,
            grid: o.grid,
            seed: o.seed,
        }
    }
}

impl OracleConfig {
    pub fn options(&self) -> OracleOptions {
        OracleOptions {
            restarts: self.restarts,
            tolerance: self.tolerance,
            grid_points: self.grid_points,
            grid: self.grid,
            seed: self.seed,
            ..OracleOptions::default()
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.check()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let config: ExperimentConfig = toml::from_str(&text).map_err(|e| HarnessError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        config.check()?;
        Ok(config)
    }

    fn check(&self) -> Result<()> {
        if self.algorithm.horizon == 0 {
            return Err(HarnessError::Config(
                "algorithm.horizon must be at least 1".into(),
            ));
        }
        self.trials.resolve()?;
        let body = self.body.build()?;
        self.adversary.build(&body, 1)?;
        Ok(())
    }
}

fn point(name: &str, v: &[f64], d: usize) -> Result<Point> {
    if v.len() != d {
        return Err(HarnessError::Config(format!(
            "`{name}` has {} entries, expected {d}",
            v.len()
        )));
    }
    Ok(Point::from_row_slice(v))
}

impl BodyConfig {
    pub fn build(&self) -> Result<ConvexBody> {
        let d = self.dim;
        if d == 0 {
            return Err(HarnessError::Config("body.dim must be at least 1".into()));
        }
        let unused = |field: &str, present: bool| {
            if present {
                Err(HarnessError::Config(format!(
                    "`{field}` does not apply to shape `{}`",
                    self.shape
                )))
            } else {
                Ok(())
            }
        };
        let body = match self.shape.as_str() {
            "ball" => {
                unused("half_width", self.half_width.is_some())?;
                unused("half_widths", self.half_widths.is_some())?;
                unused("matrix", self.matrix.is_some())?;
                ConvexBody::ball(d, self.radius.unwrap_or(1.0))?
            }
            "box" => {
                unused("radius", self.radius.is_some())?;
                unused("matrix", self.matrix.is_some())?;
                match (&self.half_widths, self.half_width) {
                    (Some(h), None) => ConvexBody::cuboid(point("half_widths", h, d)?)?,
                    (None, h) => ConvexBody::cube(d, h.unwrap_or(1.0))?,
                    (Some(_), Some(_)) => {
                        return Err(HarnessError::Config(
                            "give `half_width` or `half_widths`, not both".into(),
                        ));
                    }
                }
            }
            "simplex" => {
                unused("half_width", self.half_width.is_some())?;
                unused("half_widths", self.half_widths.is_some())?;
                unused("matrix", self.matrix.is_some())?;
                let simplex = ConvexBody::simplex(d)?;
                match self.radius {
                    Some(s) => simplex.scaled(s),
                    None => simplex,
                }
            }
            "ellipsoid" => {
                unused("radius", self.radius.is_some())?;
                unused("half_width", self.half_width.is_some())?;
                unused("half_widths", self.half_widths.is_some())?;
                let rows = self
                    .matrix
                    .as_ref()
                    .ok_or_else(|| HarnessError::Config("ellipsoid needs `matrix`".into()))?;
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(HarnessError::Config(format!("`matrix` must be {d} x {d}")));
                }
                ConvexBody::ellipsoid(DMatrix::from_fn(d, d, |i, j| rows[i][j]))?
            }
            other => return Err(HarnessError::Config(format!("unknown shape `{other}`"))),
        };
        match &self.stretch {
            Some(s) => Ok(body.stretched(&point("stretch", s, d)?)?),
            None => Ok(body),
        }
    }
}

impl AdversaryConfig {
    /// Builds the sequence for horizon `n` on `body`.
    pub fn build(&self, body: &ConvexBody, n: usize) -> Result<CostSequence> {
        let d = body.dim();
        let (_, big_r) = body.radii();
        let allow = |fields: &[(&str, bool)]| -> Result<()> {
            for (field, present) in fields {
                if *present {
                    return Err(HarnessError::Config(format!(
                        "`{field}` does not apply to adversary `{}`",
                        self.name
                    )));
                }
            }
            Ok(())
        };
        let exclusive = |a: Option<f64>, name: &str| -> Result<()> {
            if a.is_some() && self.cost_bound.is_some() {
                return Err(HarnessError::Config(format!(
                    "give `{name}` or `cost_bound`, not both"
                )));
            }
            Ok(())
        };
        let quad_scale = |reach: f64| -> f64 {
            match self.cost_bound {
                Some(c) => c / (reach * reach),
                None => self.scale.unwrap_or(1.0),
            }
        };
        let costs = match self.name.as_str() {
            "fixed-quadratic" => {
                allow(&[
                    ("magnitude", self.magnitude.is_some()),
                    ("direction", self.direction.is_some()),
                    ("turns", self.turns.is_some()),
                    ("early", self.early.is_some()),
                    ("late", self.late.is_some()),
                    ("switch_round", self.switch_round.is_some()),
                ])?;
                exclusive(self.scale, "scale")?;
                let target = match &self.target {
                    Some(t) => point("target", t, d)?,
                    None => Point::zeros(d),
                };
                let s = quad_scale(big_r + target.norm());
                CostSequence::fixed_quadratic(body, &target, s, n)?
            }
            "abrupt-switch" => {
                allow(&[
                    ("magnitude", self.magnitude.is_some()),
                    ("direction", self.direction.is_some()),
                    ("turns", self.turns.is_some()),
                    ("target", self.target.is_some()),
                ])?;
                exclusive(self.scale, "scale")?;
                let need = |v: &Option<Vec<f64>>, name: &str| -> Result<Point> {
                    let v = v.as_ref().ok_or_else(|| {
                        HarnessError::Config(format!("abrupt-switch needs `{name}`"))
                    })?;
                    point(name, v, d)
                };
                let early = need(&self.early, "early")?;
                let late = need(&self.late, "late")?;
                let s = quad_scale(big_r + early.norm().max(late.norm()));
                let switch = self.switch_round.unwrap_or(n / 2);
                CostSequence::abrupt_switch(body, &early, &late, switch, s, n)?
            }
            "constant-linear" | "alternating-linear" | "drifting-linear" => {
                allow(&[
                    ("scale", self.scale.is_some()),
                    ("target", self.target.is_some()),
                    ("early", self.early.is_some()),
                    ("late", self.late.is_some()),
                    ("switch_round", self.switch_round.is_some()),
                ])?;
                exclusive(self.magnitude, "magnitude")?;
                let a = match self.cost_bound {
                    Some(c) => c / big_r,
                    None => self.magnitude.unwrap_or(1.0),
                };
                let direction = || -> Result<Point> {
                    let w = match &self.direction {
                        Some(w) => point("direction", w, d)?,
                        None => Point::from_fn(d, |i, _| if i == 0 { 1.0 } else { 0.0 }),
                    };
                    let norm = w.norm();
                    if norm == 0.0 {
                        return Err(HarnessError::Config("`direction` must be nonzero".into()));
                    }
                    Ok(w / norm)
                };
                let schedule = match self.name.as_str() {
                    "constant-linear" => {
                        allow(&[("turns", self.turns.is_some())])?;
                        DirectionSchedule::Constant(direction()?)
                    }
                    "alternating-linear" => {
                        allow(&[("turns", self.turns.is_some())])?;
                        DirectionSchedule::Alternating(direction()?)
                    }
                    _ => {
                        allow(&[("direction", self.direction.is_some())])?;
                        DirectionSchedule::Rotating {
                            turns: self.turns.unwrap_or(0.5),
                        }
                    }
                };
                CostSequence::drifting_linear(body, &schedule, a, n)?
            }
            other => return Err(HarnessError::Config(format!("unknown adversary `{other}`"))),
        };
        Ok(costs)
    }
}
