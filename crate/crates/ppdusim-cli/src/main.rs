//! Command-line front end for the uplink scheduling simulator.
//!
//! Three verbs cover the workflows the library supports:
//!
//! * `run` simulates the configured policy once,
//! * `sweep` reruns a weighted policy across several tradeoff weights,
//! * `search` exhaustively evaluates every fixed duration on the grid.
//!
//! Each verb reads one TOML experiment description and writes CSV/JSON
//! artifacts into an output directory. Identical config and seed produce
//! byte-identical artifacts. On failure the process prints a single JSON
//! object to stderr (`{"kind": ..., "error": ...}`) and exits nonzero, so
//! scripts never have to scrape prose.

use clap::error::ErrorKind as ClapErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use ppdusim::config::{parse_config, ExperimentConfig};
use ppdusim::engine::{self, ConstraintProblem, RunReport};
use ppdusim::model::PolicyKind;
use ppdusim::report;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ppdusim",
    version,
    about = "Scheduling-duration policy simulator for multi-user uplink WLANs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the configured policy once.
    ///
    /// Writes metrics.csv and run.json, plus traces.csv when tracing is on.
    Run(CommonArgs),
    /// Rerun the configured weighted policy at each given weight.
    ///
    /// Every point replays identical traffic (same seed). Writes
    /// metrics.csv with one row per weight, and sweep.json.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated tradeoff weights, e.g. 100,500,1000,2000,3000.
        #[arg(long = "v-list", value_delimiter = ',', required = true)]
        v_list: Vec<f64>,
    },
    /// Evaluate every fixed duration on the grid and pick the best
    /// candidate that meets the chosen constraint family.
    ///
    /// Writes candidates.csv (one row per duration), search.json, and,
    /// when a feasible candidate exists, metrics.csv with its row.
    Search {
        #[command(flatten)]
        common: CommonArgs,
        /// Constraint family a winning candidate must satisfy.
        #[arg(long, value_enum)]
        problem: ProblemArg,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment description (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the configured RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Artifact directory. Defaults to the config's out_dir, then ".".
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the configured slot horizon.
    #[arg(long)]
    horizon: Option<u64>,
    /// Record a downsampled per-slot trajectory (traces.csv).
    #[arg(long)]
    trace: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    /// Minimize average padding subject to the fairness targets.
    Padding,
    /// Maximize average emptied queues subject to the energy budgets.
    Energy,
}

impl From<ProblemArg> for ConstraintProblem {
    fn from(arg: ProblemArg) -> Self {
        match arg {
            ProblemArg::Padding => ConstraintProblem::Padding,
            ProblemArg::Energy => ConstraintProblem::Energy,
        }
    }
}

/// Failure classes surfaced to scripts in the stderr JSON object.
enum Failure {
    Usage(String),
    Config(String),
    Simulation(String),
    Write(String),
}

impl Failure {
    fn kind(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage",
            Failure::Config(_) => "config",
            Failure::Simulation(_) => "simulation",
            Failure::Write(_) => "write",
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m)
            | Failure::Config(m)
            | Failure::Simulation(m)
            | Failure::Write(m) => m,
        }
    }

    fn exit_code(&self) -> ExitCode {
        match self {
            Failure::Usage(_) => ExitCode::from(2),
            _ => ExitCode::FAILURE,
        }
    }
}

impl From<ppdusim::engine::SimError> for Failure {
    fn from(err: ppdusim::engine::SimError) -> Self {
        match err {
            ppdusim::engine::SimError::Config(e) => Failure::Config(e.to_string()),
            other => Failure::Simulation(other.to_string()),
        }
    }
}

impl From<report::ReportError> for Failure {
    fn from(err: report::ReportError) -> Self {
        Failure::Write(err.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // Help and version requests arrive as "errors" with success status.
        Err(err)
            if matches!(
                err.kind(),
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion
            ) =>
        {
            print!("{err}");
            return ExitCode::SUCCESS;
        }
        Err(err) => return fail(&Failure::Usage(err.to_string())),
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => fail(&failure),
    }
}

fn fail(failure: &Failure) -> ExitCode {
    let body = serde_json::json!({
        "kind": failure.kind(),
        "error": failure.message(),
    });
    eprintln!("{body}");
    failure.exit_code()
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run(common) => {
            let (config, out) = load(&common)?;
            let report = engine::run(&config).map_err(Failure::from)?;
            write_artifact(&out, "metrics.csv", report::metrics_csv(std::slice::from_ref(&report))?)?;
            write_artifact(&out, "run.json", report::run_json(&config, &report)?)?;
            write_traces(&out, "traces.csv", &report)?;
            Ok(())
        }
        Command::Sweep { common, v_list } => {
            if v_list.is_empty() {
                return Err(Failure::Usage("--v-list needs at least one weight".into()));
            }
            let (config, out) = load(&common)?;
            let reports = engine::v_sweep(&config, &v_list).map_err(Failure::from)?;
            write_artifact(&out, "metrics.csv", report::metrics_csv(&reports)?)?;
            write_artifact(&out, "sweep.json", report::sweep_json(&config, &reports)?)?;
            for report in &reports {
                let v = report.meta.v.expect("sweep points carry their weight");
                write_traces(&out, &format!("traces_v{v}.csv"), report)?;
            }
            Ok(())
        }
        Command::Search { common, problem } => {
            let (config, out) = load(&common)?;
            let search = engine::hypothetical_fppdu_search(&config, problem.into())
                .map_err(Failure::from)?;
            write_artifact(&out, "candidates.csv", report::candidates_csv(&search)?)?;
            write_artifact(&out, "search.json", report::search_json(&config, &search)?)?;
            if let Some(best) = &search.best {
                // Replaying the winner under the same seed reproduces its
                // candidate row and yields full run provenance.
                let mut winner = config.clone();
                winner.policy.kind = PolicyKind::Fixed {
                    ts_ms: ppdusim::model::DurationMs::from_ms(best.ts_ms)
                        .map_err(|e| Failure::Simulation(e.to_string()))?,
                };
                let report = engine::run(&winner).map_err(Failure::from)?;
                write_artifact(
                    &out,
                    "metrics.csv",
                    report::metrics_csv(std::slice::from_ref(&report))?,
                )?;
            }
            Ok(())
        }
    }
}

/// Parses the config, applies command-line overrides, and picks the
/// artifact directory.
fn load(common: &CommonArgs) -> Result<(ExperimentConfig, PathBuf), Failure> {
    let mut config =
        parse_config(&common.config).map_err(|e| Failure::Config(e.to_string()))?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(horizon) = common.horizon {
        config.horizon_slots = horizon;
    }
    if common.trace && config.trace_stride.is_none() {
        config.trace_stride = Some(default_stride(config.horizon_slots));
    }
    config.validate().map_err(|e| Failure::Config(e.to_string()))?;
    let out = common
        .out
        .clone()
        .or_else(|| config.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((config, out))
}

/// Stride that keeps a trace near two thousand points regardless of horizon.
fn default_stride(horizon_slots: u64) -> u64 {
    (horizon_slots / 2000).max(1)
}

fn write_artifact(dir: &Path, name: &str, body: String) -> Result<(), Failure> {
    report::atomic_write(&dir.join(name), body.as_bytes()).map_err(Failure::from)
}

/// Traces are written only when the run actually sampled any, so a config
/// without tracing produces no empty file.
fn write_traces(dir: &Path, name: &str, report: &RunReport) -> Result<(), Failure> {
    if report.trace.is_empty() {
        return Ok(());
    }
    write_artifact(dir, name, report::traces_csv(report)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stride_targets_two_thousand_points() {
        assert_eq!(default_stride(200_000), 100);
        assert_eq!(default_stride(1999), 1);
        assert_eq!(default_stride(0), 1);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
