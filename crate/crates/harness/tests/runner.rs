use std::fs;

use bco_harness::config::ExperimentConfig;
use bco_harness::runner::{write_outputs, Experiment, TRIALS_CSV};
use bco_harness::{exit, HarnessError};

fn config(algorithm: &str, adversary: &str, trials: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(&format!(
        r#"
[body]
shape = "box"
dim = 2
half_width = 1.0

[adversary]
{adversary}

[algorithm]
name = "{algorithm}"
horizon = 1000

[trials]
{trials}

[oracle]
grid_points = 20000
"#
    ))
    .unwrap()
}

const QUADRATIC: &str = "name = \"fixed-quadratic\"\ntarget = [0.5, 0.25]\ncost_bound = 1.0";

#[test]
fn identical_configs_give_identical_bytes() {
    let cfg = config("bgd-general", QUADRATIC, "base_seed = 3\ncount = 5");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let outcome = Experiment::prepare(&cfg).unwrap().run().unwrap();
        write_outputs(dir, &outcome, true).unwrap();
    }
    for name in [
        TRIALS_CSV,
        "trials_summary.csv",
        "points.csv",
        "summary.json",
    ] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn aggregation_ignores_execution_order() {
    let cfg = config("spall-bgd", QUADRATIC, "seeds = [4, 1, 9, 2]");
    let exp = Experiment::prepare(&cfg).unwrap();
    let forward: Vec<_> = [1, 2, 4, 9]
        .iter()
        .map(|&s| exp.run_trial(s).unwrap())
        .collect();
    let mut backward: Vec<_> = [9, 4, 2, 1]
        .iter()
        .map(|&s| exp.run_trial(s).unwrap())
        .collect();
    backward.swap(0, 2);
    let a = exp.summarize(forward).summary;
    let b = exp.summarize(backward).summary;
    assert_eq!(a, b);
    assert_eq!(a, exp.run().unwrap().summary);
}

#[test]
fn cumulative_cost_is_the_prefix_sum() {
    let cfg = config("bgd-lipschitz", QUADRATIC, "seeds = [1]");
    let exp = Experiment::prepare(&cfg).unwrap();
    let trial = exp.run_trial(1).unwrap();
    let mut sum = 0.0;
    for (i, r) in trial.rounds.iter().enumerate() {
        sum += r.cost;
        assert_eq!(r.t, i + 1);
        assert_eq!(r.cum_cost, sum);
        assert!(r.x.iter().all(|v| v.abs() <= 1.0 + 1e-9));
    }
    assert_eq!(trial.regret, trial.total - trial.optimal_total);
}

#[test]
fn full_information_is_deterministic_and_within_bound() {
    let adversary = "name = \"alternating-linear\"\ndirection = [1.0, 0.0]\nmagnitude = 1.0";
    let cfg = config("ogd-full-info", adversary, "base_seed = 0\ncount = 3");
    let outcome = Experiment::prepare(&cfg).unwrap().run().unwrap();
    assert!(outcome.passed());
    let regrets: Vec<f64> = outcome.trials.iter().map(|t| t.regret).collect();
    assert!(regrets.windows(2).all(|w| w[0] == w[1]));
    assert_eq!(outcome.summary.se, 0.0);
}

#[test]
fn simplex_points_are_reported_in_original_coordinates() {
    let cfg = ExperimentConfig::from_toml(
        r#"
[body]
shape = "simplex"
dim = 2

[adversary]
name = "fixed-quadratic"
target = [0.1, 0.0]
cost_bound = 1.0

[algorithm]
name = "bgd-general"
horizon = 500

[trials]
seeds = [1]
"#,
    )
    .unwrap();
    let outcome = Experiment::prepare(&cfg).unwrap().run().unwrap();
    for r in &outcome.trials[0].rounds {
        assert!(r.x.iter().all(|&v| v >= -1e-9) && r.x.sum() <= 1.0 + 1e-9);
    }
    let third = 1.0 / 3.0;
    let opt = &outcome.summary.optimum_point;
    assert!((opt[0] - (third + 0.1)).abs() < 1e-6 && (opt[1] - third).abs() < 1e-6);
}

#[test]
fn contract_errors_map_to_their_exit_code() {
    let e: HarnessError = bco_core::Error::CostBound {
        value: 2.0,
        bound: 1.0,
    }
    .into();
    assert_eq!(e.exit_code(), exit::CONTRACT);
    let e: HarnessError = bco_core::Error::HorizonTooSmall { n: 1, min_n: 9 }.into();
    assert_eq!(e.exit_code(), exit::GUARD);
}
