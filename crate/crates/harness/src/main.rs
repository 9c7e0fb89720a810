use std::path::PathBuf;
use std::process::ExitCode;

use bco_core::adversary::validate;
use bco_core::bgd::{params_general, params_lipschitz, BgdParams};
use bco_core::sampling::RandomStream;
use bco_harness::bounds::{bound_value, BoundKind};
use bco_harness::config::{Algorithm, ExperimentConfig, TrialsConfig};
use bco_harness::runner::{run_experiment, SUMMARY_JSON, TRIALS_CSV};
use bco_harness::{exit, HarnessError, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bco",
    version,
    about = "Bandit convex optimization experiment runner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write CSV and JSON reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated seed list.
        #[arg(long, value_delimiter = ',', conflicts_with_all = ["trials", "base_seed"])]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, requires = "trials")]
        base_seed: Option<u64>,
        /// Put the body in near-isotropic position first.
        #[arg(long)]
        reshape: bool,
    },
    /// Print the parameter schedule and its regret bound.
    Params {
        #[arg(long)]
        algo: Algorithm,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        r: f64,
        #[arg(long = "R")]
        big_r: f64,
        #[arg(long = "C")]
        c: f64,
        #[arg(long = "L")]
        l: Option<f64>,
    },
    /// Check the configured cost sequence against its declared C, L and convexity.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Run {
            config,
            out,
            seeds,
            trials,
            base_seed,
            reshape,
        } => {
            let mut config = ExperimentConfig::load(&config)?;
            if let Some(out) = out {
                config.output.dir = out;
            }
            if seeds.is_some() || trials.is_some() {
                config.trials = TrialsConfig {
                    seeds,
                    base_seed,
                    count: trials,
                };
                config.trials.resolve()?;
            }
            if reshape {
                config.reshape.enabled = true;
            }
            let outcome = run_experiment(&config)?;
            let s = &outcome.summary;
            for t in &outcome.trials {
                println!(
                    "seed {:>6}  regret {:>14.6}  ({:.2?})",
                    t.seed, t.regret, t.wall_time
                );
            }
            if s.optimum.disagreement {
                let grid = s.optimum.grid.as_ref().map_or(f64::NAN, |g| g.total);
                eprintln!(
                    "warning: oracle disagreement: descent total {} vs grid total {} (tolerance {})",
                    s.optimum.descent.total, grid, s.optimum.tolerance
                );
            }
            if let Some(v) = &s.validation {
                if v.violations > 0 {
                    eprintln!(
                        "warning: cost validation found {} violations in {} samples",
                        v.violations, v.samples
                    );
                }
            }
            if let Some(kappa) = s.kappa {
                println!("kappa {kappa}");
            }
            println!(
                "{} on {}: mean regret {} (se {}), {} bound {}: {}",
                s.algorithm,
                s.adversary,
                s.mean_regret,
                s.se,
                s.kind,
                s.bound,
                if s.passed { "PASS" } else { "FAIL" }
            );
            println!(
                "wrote {} and {} to {}",
                TRIALS_CSV,
                SUMMARY_JSON,
                config.output.dir.display()
            );
            Ok(if s.passed {
                exit::OK
            } else {
                exit::BOUND_FAILED
            })
        }
        Command::Params {
            algo,
            n,
            d,
            r,
            big_r,
            c,
            l,
        } => {
            print_params(algo, n, d, r, big_r, c, l)?;
            Ok(exit::OK)
        }
        Command::Validate { config } => {
            let config = ExperimentConfig::load(&config)?;
            let body = config.body.build()?;
            let costs = config.adversary.build(&body, config.algorithm.horizon)?;
            let mut stream = RandomStream::new(config.validate.seed, 0);
            let report = validate(&costs, &mut stream, config.validate.samples)?;
            println!(
                "{}: C = {}, L = {:?}, {} samples, {} violations",
                costs.name(),
                costs.bound(),
                costs.lipschitz(),
                report.samples,
                report.violation_count
            );
            for v in &report.violations {
                println!(
                    "  {:?} at round {}: witness {:?} partner {:?} excess {}",
                    v.check,
                    v.round,
                    v.witness.as_slice(),
                    v.partner.as_ref().map(|p| p.as_slice().to_vec()),
                    v.excess
                );
            }
            Ok(if report.passed() {
                exit::OK
            } else {
                exit::BOUND_FAILED
            })
        }
    }
}

fn print_params(
    algo: Algorithm,
    n: u64,
    d: usize,
    r: f64,
    big_r: f64,
    c: f64,
    l: Option<f64>,
) -> Result<()> {
    let show = |p: &BgdParams, kind: BoundKind| -> Result<()> {
        println!("nu    = {}", p.nu);
        println!("delta = {}", p.delta);
        println!("alpha = {}", p.alpha);
        println!("eta   = {}", p.step);
        println!("G     = {}", p.gradient_bound);
        println!(
            "bound = {} ({kind})",
            bound_value(kind, n, d, r, big_r, c, l)?
        );
        Ok(())
    };
    match algo {
        Algorithm::BgdGeneral | Algorithm::SpallBgd => {
            show(&params_general(n, d, r, big_r, c)?, BoundKind::General)
        }
        Algorithm::BgdLipschitz => {
            let l = l.ok_or_else(|| HarnessError::Config("bgd-lipschitz needs --L".into()))?;
            show(
                &params_lipschitz(n, d, r, big_r, c, l)?,
                BoundKind::Lipschitz,
            )
        }
        Algorithm::OgdFullInfo => {
            let g = l.ok_or_else(|| {
                HarnessError::Config("ogd-full-info needs --L (the gradient bound G)".into())
            })?;
            println!("eta   = {}", big_r / (g * (n as f64).sqrt()));
            println!("G     = {g}");
            println!(
                "bound = {} ({})",
                bound_value(BoundKind::FullInformation, n, d, r, big_r, c, Some(g))?,
                BoundKind::FullInformation
            );
            Ok(())
        }
    }
}
