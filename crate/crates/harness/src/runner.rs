//! Seeded trials, aggregation and output files.

use std::fs;
use std::path::Path;
use std::time::Instant;

use bco_core::adversary::{validate, CostSequence};
use bco_core::bgd::{params_general, params_lipschitz, run_bgd_with, BgdParams, Perturbation};
use bco_core::descent::{run_full_information, DescentConfig};
use bco_core::geometry::ConvexBody;
use bco_core::reshape::{isotropic_position, transform_costs, AffineTransform, IsotropicPosition};
use bco_core::sampling::RandomStream;
use bco_core::{MeanAccumulator, Point};
use rayon::prelude::*;

use crate::bounds::{bound_value, BoundKind};
use crate::config::{Algorithm, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::oracle::{offline_optimum, OracleResult};
use crate::report::{
    ReshapeReport, RoundRecord, RunParams, Summary, TrialLine, TrialReport, ValidationSummary,
};

#[derive(Debug, Clone)]
enum Plan {
    Bandit(BgdParams, Perturbation),
    FullInformation(DescentConfig),
}

/// Everything shared by the trials of one experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    /// The configured body and costs.
    pub body: ConvexBody,
    pub costs: CostSequence,
    /// Body and costs the learner runs on (transformed when reshaping).
    pub run_body: ConvexBody,
    pub run_costs: CostSequence,
    pub position: Option<IsotropicPosition>,
    pub optimum: OracleResult,
    pub kind: BoundKind,
    pub bound: f64,
    pub params: RunParams,
    pub validation: Option<ValidationSummary>,
    plan: Plan,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: Summary,
    pub trials: Vec<TrialReport>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.summary.passed
    }
}

impl Experiment {
    /// Builds the body and costs, reshapes if asked, derives the schedule
    /// (enforcing its guard) and computes the hindsight optimum.
    pub fn prepare(config: &ExperimentConfig) -> Result<Self> {
        let seeds = config.trials.resolve()?;
        let n = config.algorithm.horizon;
        if n == 0 {
            return Err(HarnessError::Config(
                "algorithm.horizon must be at least 1".into(),
            ));
        }
        let body = config.body.build()?;
        let costs = config.adversary.build(&body, n)?;
        let d = body.dim();

        let validation = if config.validate.samples > 0 {
            let mut stream = RandomStream::new(config.validate.seed, 0);
            let report = validate(&costs, &mut stream, config.validate.samples)?;
            Some(ValidationSummary {
                samples: report.samples,
                violations: report.violation_count,
            })
        } else {
            None
        };

        let (run_body, run_costs, position, r, big_r, l) = if config.reshape.enabled {
            let rc = &config.reshape;
            let mut stream = RandomStream::new(rc.seed, 0);
            let pos = isotropic_position(
                &body,
                &mut stream,
                rc.samples,
                rc.radius_samples,
                rc.directions,
            )?;
            let moved = transform_costs(&costs, &pos.transform)?;
            let (r, big_r, l) = (pos.inner_radius, pos.outer_radius, moved.lipschitz());
            (pos.body.clone(), moved, Some(pos), r, big_r, l)
        } else {
            let (r, big_r) = body.radii();
            (
                body.clone(),
                costs.clone(),
                None,
                r,
                big_r,
                costs.lipschitz(),
            )
        };
        let c = costs.bound();
        let n64 = n as u64;

        let need_l = |what: &str| {
            l.ok_or_else(|| {
                HarnessError::Config(format!("{what} needs a declared Lipschitz constant"))
            })
        };
        let (plan, kind, params) = match config.algorithm.name {
            Algorithm::BgdGeneral | Algorithm::SpallBgd => {
                let p = params_general(n64, d, r, big_r, c)?;
                let perturbation = if config.algorithm.name == Algorithm::SpallBgd {
                    Perturbation::Rademacher
                } else {
                    Perturbation::Sphere
                };
                let kind = if position.is_some() {
                    BoundKind::CorollaryGeneral
                } else {
                    BoundKind::General
                };
                let params = bandit_params(&p, l);
                (Plan::Bandit(p, perturbation), kind, params)
            }
            Algorithm::BgdLipschitz => {
                let p = params_lipschitz(n64, d, r, big_r, c, need_l("bgd-lipschitz")?)?;
                let kind = if position.is_some() {
                    BoundKind::CorollaryLipschitz
                } else {
                    BoundKind::Lipschitz
                };
                let params = bandit_params(&p, l);
                (Plan::Bandit(p, Perturbation::Sphere), kind, params)
            }
            Algorithm::OgdFullInfo => {
                if !run_costs.has_gradients() {
                    return Err(HarnessError::Config(
                        "ogd-full-info needs differentiable costs".into(),
                    ));
                }
                let g = need_l("ogd-full-info")?;
                let cfg = DescentConfig::new(&run_body, g, n)?
                    .with_step(big_r / (g * (n as f64).sqrt()))?;
                let params = RunParams {
                    n: n64,
                    d,
                    r,
                    big_r,
                    c,
                    l,
                    eta: cfg.step,
                    g,
                    nu: None,
                    delta: None,
                    alpha: None,
                };
                (
                    Plan::FullInformation(cfg),
                    BoundKind::FullInformation,
                    params,
                )
            }
        };

        let bound = match (kind, &position) {
            (BoundKind::CorollaryGeneral, Some(pos)) => {
                bound_value(kind, n64, d, r, big_r, c, None)? * pos.kappa.cbrt()
            }
            (BoundKind::CorollaryLipschitz, Some(pos)) => {
                let (_, original_r) = body.radii();
                bound_value(kind, n64, d, r, original_r, c, costs.lipschitz())? * pos.kappa.sqrt()
            }
            (BoundKind::FullInformation, _) => {
                bound_value(kind, n64, d, r, big_r, c, Some(params.g))?
            }
            _ => bound_value(kind, n64, d, r, big_r, c, l)?,
        };

        let optimum = offline_optimum(&costs, &body, &config.oracle.options())?;

        Ok(Self {
            config: config.clone(),
            seeds,
            body,
            costs,
            run_body,
            run_costs,
            position,
            optimum,
            kind,
            bound,
            params,
            validation,
            plan,
        })
    }

    pub fn transform(&self) -> Option<&AffineTransform> {
        self.position.as_ref().map(|p| &p.transform)
    }

    /// Maps a point of the run body back to the configured coordinates.
    pub fn to_original(&self, u: &Point) -> Point {
        let x = match self.transform() {
            Some(t) => t.invert(u),
            None => u.clone(),
        };
        x + self.body.original_offset()
    }

    /// One trial. The stream is `(seed, 0)` regardless of execution order.
    pub fn run_trial(&self, seed: u64) -> Result<TrialReport> {
        let start = Instant::now();
        let (queries, costs, center_costs) = match &self.plan {
            Plan::Bandit(params, perturbation) => {
                let mut stream = RandomStream::new(seed, 0);
                let run = run_bgd_with(
                    &self.run_costs,
                    &self.run_body,
                    params,
                    &mut stream,
                    *perturbation,
                )?;
                (run.queries, run.costs, Some(run.center_costs))
            }
            Plan::FullInformation(cfg) => {
                let run = run_full_information(&self.run_costs, cfg)?;
                (run.trajectory, run.costs, None)
            }
        };
        let mut cum = 0.0;
        let rounds = queries
            .iter()
            .zip(&costs)
            .enumerate()
            .map(|(i, (x, &cost))| {
                cum += cost;
                RoundRecord {
                    t: i + 1,
                    x: self.to_original(x),
                    cost,
                    cum_cost: cum,
                }
            })
            .collect();
        let total = cum;
        let center_total = center_costs.map_or(total, |c| c.iter().sum());
        Ok(TrialReport {
            seed,
            rounds,
            total,
            center_total,
            optimal_total: self.optimum.total,
            regret: total - self.optimum.total,
            wall_time: start.elapsed(),
        })
    }

    /// Runs every seed concurrently and aggregates.
    pub fn run(&self) -> Result<Outcome> {
        let trials = self
            .seeds
            .par_iter()
            .map(|&seed| self.run_trial(seed))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.summarize(trials))
    }

    /// Aggregates trials keyed by seed; the input order does not matter.
    pub fn summarize(&self, mut trials: Vec<TrialReport>) -> Outcome {
        trials.sort_by_key(|t| t.seed);
        let mut acc = MeanAccumulator::new(1);
        for t in &trials {
            acc.push_scalar(t.regret);
        }
        let mean_regret = acc.mean()[0];
        let se = if trials.len() > 1 {
            acc.std_error()[0]
        } else {
            0.0
        };
        let (compared, rule) = if self.config.algorithm.name.is_stochastic() {
            (
                mean_regret + 2.0 * se,
                "mean_regret + 2 se <= bound".to_string(),
            )
        } else {
            (
                trials
                    .iter()
                    .map(|t| t.regret)
                    .fold(f64::NEG_INFINITY, f64::max),
                "every trial regret <= bound".to_string(),
            )
        };
        let summary = Summary {
            mean_regret,
            se,
            bound: self.bound,
            kind: self.kind,
            params: self.params.clone(),
            kappa: self.position.as_ref().map(|p| p.kappa),
            passed: compared <= self.bound,
            compared,
            rule,
            algorithm: self.config.algorithm.name.name().to_string(),
            adversary: self.costs.name().to_string(),
            body: self.body.to_string(),
            trials: trials
                .iter()
                .enumerate()
                .map(|(i, t)| TrialLine {
                    trial: i,
                    seed: t.seed,
                    total: t.total,
                    regret: t.regret,
                    center_total: t.center_total,
                })
                .collect(),
            optimum_point: (&self.optimum.point + self.body.original_offset())
                .iter()
                .copied()
                .collect(),
            optimum: self.optimum.clone(),
            reshape: self.position.as_ref().map(|p| ReshapeReport {
                matrix: p.transform.matrix().transpose().iter().copied().collect(),
                center: p.transform.center().iter().copied().collect(),
                max_radius: p.max_radius,
                min_radius: p.min_radius,
                inner_radius: p.inner_radius,
                outer_radius: p.outer_radius,
            }),
            validation: self.validation.clone(),
        };
        Outcome { summary, trials }
    }
}

fn bandit_params(p: &BgdParams, l: Option<f64>) -> RunParams {
    RunParams {
        n: p.horizon,
        d: p.dim,
        r: p.inner_radius,
        big_r: p.outer_radius,
        c: p.cost_bound,
        l,
        eta: p.step,
        g: p.gradient_bound,
        nu: Some(p.nu),
        delta: Some(p.delta),
        alpha: Some(p.alpha),
    }
}

/// Prepares, runs and writes outputs to `config.output.dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Outcome> {
    let experiment = Experiment::prepare(config)?;
    let outcome = experiment.run()?;
    write_outputs(&config.output.dir, &outcome, config.output.points)?;
    Ok(outcome)
}

pub const TRIALS_CSV: &str = "trials.csv";
pub const TRIALS_SUMMARY_CSV: &str = "trials_summary.csv";
pub const POINTS_CSV: &str = "points.csv";
pub const SUMMARY_JSON: &str = "summary.json";

/// Writes `trials.csv`, `trials_summary.csv`, `summary.json` and optionally
/// `points.csv`. No timing information is written, so reruns are byte-identical.
pub fn write_outputs(dir: &Path, outcome: &Outcome, points: bool) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;

    let mut w = csv_writer(&dir.join(TRIALS_CSV))?;
    w.write_record(["trial", "seed", "round", "cost", "cum_cost"])?;
    for (i, trial) in outcome.trials.iter().enumerate() {
        for r in &trial.rounds {
            w.write_record([
                i.to_string(),
                trial.seed.to_string(),
                r.t.to_string(),
                r.cost.to_string(),
                r.cum_cost.to_string(),
            ])?;
        }
    }
    flush(w, &dir.join(TRIALS_CSV))?;

    let mut w = csv_writer(&dir.join(TRIALS_SUMMARY_CSV))?;
    w.write_record([
        "trial",
        "seed",
        "total",
        "optimal_total",
        "regret",
        "center_total",
    ])?;
    for (i, t) in outcome.trials.iter().enumerate() {
        w.write_record([
            i.to_string(),
            t.seed.to_string(),
            t.total.to_string(),
            t.optimal_total.to_string(),
            t.regret.to_string(),
            t.center_total.to_string(),
        ])?;
    }
    flush(w, &dir.join(TRIALS_SUMMARY_CSV))?;

    if points {
        let d = outcome.summary.params.d;
        let path = dir.join(POINTS_CSV);
        let mut w = csv_writer(&path)?;
        let mut header = vec!["trial".to_string(), "seed".into(), "round".into()];
        header.extend((1..=d).map(|i| format!("x{i}")));
        w.write_record(&header)?;
        for (i, trial) in outcome.trials.iter().enumerate() {
            for r in &trial.rounds {
                let mut row = vec![i.to_string(), trial.seed.to_string(), r.t.to_string()];
                row.extend(r.x.iter().map(f64::to_string));
                w.write_record(&row)?;
            }
        }
        flush(w, &path)?;
    }

    let path = dir.join(SUMMARY_JSON);
    let mut text = serde_json::to_string_pretty(&outcome.summary)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| HarnessError::io(path, e))?;
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn flush(mut w: csv::Writer<fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| HarnessError::io(path, e))
}
