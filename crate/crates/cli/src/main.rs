//! Command-line runner for platoon scenarios.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use log::{error, info};
use platoon_core::output::write_artifacts;
use platoon_core::platoon::{run, RunError, RunOptions};
use platoon_core::scenario::{parse_scenario, parse_scenario_str, Scenario, ScenarioError, TopologySpec, REFERENCE_SCENARIO_JSON};
use platoon_core::topology::TopologyKind;

const EXIT_INVALID: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Debug, Parser)]
#[command(name = "platoon", version, about = "Simulate a distributed MPC vehicle platoon")]
struct Args {
    /// Scenario JSON file; the bundled reference scenario is used when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output directory for trace.csv, summary.json and subspace files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the scenario's topology (pf, plf, tpf, tplf).
    #[arg(long)]
    topology: Option<TopologyKind>,
    /// Enable or disable metric learning of the cost weights.
    #[arg(long, value_enum)]
    metric_learning: Option<Switch>,
    /// Seed for the metric-learning initialization.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write subspace_{Q,R,F,G}.csv.
    #[arg(long)]
    emit_subspaces: bool,
}

fn load(args: &Args) -> Result<Scenario, ScenarioError> {
    let mut scenario = match &args.scenario {
        Some(path) => parse_scenario(path)?,
        None => parse_scenario_str(REFERENCE_SCENARIO_JSON)?,
    };
    if let Some(kind) = args.topology {
        scenario.topology = TopologySpec::Kind(kind);
    }
    if let Some(switch) = args.metric_learning {
        scenario.metric_learning.enabled = switch == Switch::On;
    }
    if let Some(seed) = args.seed {
        scenario.metric_learning.seed = seed;
    }
    scenario.validate()?;
    Ok(scenario)
}

fn init_logging() {
    let level = std::env::var("PLATOON_LOG_LEVEL").unwrap_or_else(|_| "warn".into());
    env_logger::Builder::new().parse_filters(&level).format_timestamp(None).init();
}

fn main() -> ExitCode {
    init_logging();
    let args = Args::parse();
    let scenario = match load(&args) {
        Ok(s) => s,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    info!("running {} followers for {} s", scenario.n_followers, scenario.duration_s);
    let output = match run(&scenario, RunOptions { record_horizons: args.emit_subspaces }) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                RunError::Solver { .. } | RunError::Metric(_) => EXIT_SOLVER,
                _ => EXIT_INVALID,
            };
            return ExitCode::from(code);
        }
    };
    match write_artifacts(&args.out, &scenario, &output, args.emit_subspaces) {
        Ok(summary) => {
            info!(
                "converged at {:?} s (bound {} s), collision free: {}",
                summary.convergence_time_s, summary.t_conv_bound.seconds, summary.collision_free
            );
            println!("{}", summary.to_json());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: cannot write artifacts to {}: {e}", args.out.display());
            ExitCode::FAILURE
        }
    }
}
