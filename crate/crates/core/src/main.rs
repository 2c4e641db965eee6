use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use recsize::harness::{run, ExperimentConfig, ExperimentKind};
use recsize::Error;

#[derive(Parser)]
#[command(
    name = "recsize",
    version,
    about = "Communication and search policies for recommendation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the high-dimensional joint problem at one (c_s, c_c)
    SolveJoint(Common),
    /// Joint solution over a (c_s, c_c) grid
    Heatmap(Common),
    /// Closed-form tilted optimum at one (c_s, c_c)
    SolveTilted(Common),
    /// Tilted versus posterior-sampling values over a grid
    CompareTilt(Common),
    /// Monte Carlo payoff of one finite policy
    Simulate(Common),
    /// Finite-d grid search over (kappa, n)
    Optimize(Common),
    /// Finite optimum versus mapped asymptotic policy over a d sweep
    Gap(Common),
    /// Two-subspace weighted problem
    Weighted(Common),
    /// Switching threshold per c_s
    SwitchingCurve(Common),
}

#[derive(Args)]
struct Common {
    /// CSV output path; metadata goes next to it as .json. Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo replications
    #[arg(long)]
    reps: Option<u64>,
    /// Flat `key = value` config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parameter override, repeatable
    #[arg(short = 'p', long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

impl Command {
    fn split(self) -> (ExperimentKind, Common) {
        match self {
            Command::SolveJoint(c) => (ExperimentKind::AsymptoticSolve, c),
            Command::Heatmap(c) => (ExperimentKind::AsymptoticHeatmap, c),
            Command::SolveTilted(c) => (ExperimentKind::TiltedSolve, c),
            Command::CompareTilt(c) => (ExperimentKind::TiltedCompare, c),
            Command::Simulate(c) => (ExperimentKind::Simulate, c),
            Command::Optimize(c) => (ExperimentKind::FiniteSweep, c),
            Command::Gap(c) => (ExperimentKind::GapSweep, c),
            Command::Weighted(c) => (ExperimentKind::WeightedSolve, c),
            Command::SwitchingCurve(c) => (ExperimentKind::SwitchingCurve, c),
        }
    }
}

fn execute(kind: ExperimentKind, common: Common) -> Result<(), Error> {
    let file = match &common.config {
        Some(path) => Some(std::fs::read_to_string(path).map_err(|e| Error::Config {
            key: "--config".into(),
            message: format!("{}: {e}", path.display()),
        })?),
        None => None,
    };
    let mut overrides = Vec::new();
    for p in &common.params {
        let (k, v) = p.split_once('=').ok_or_else(|| Error::Config {
            key: p.clone(),
            message: "expected KEY=VALUE".into(),
        })?;
        overrides.push((k.trim().to_string(), v.trim().to_string()));
    }
    if let Some(seed) = common.seed {
        overrides.push(("seed".into(), seed.to_string()));
    }
    if let Some(reps) = common.reps {
        overrides.push(("reps".into(), reps.to_string()));
    }
    let config = ExperimentConfig::resolve(kind, file.as_deref(), &overrides)?;
    let table = run(&config)?;
    match &common.out {
        Some(path) => {
            table.write(path)?;
        }
        None => print!("{}", table.to_csv()),
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::Dimension(_) => 2,
        Error::Sampler { .. } => 4,
        _ => 3,
    }
}

fn error_record(e: &Error) -> serde_json::Value {
    let kind = match e {
        Error::Config { .. } | Error::Dimension(_) => "config",
        Error::Sampler { .. } => "sampler",
        Error::Io(_) => "io",
        _ => "numeric",
    };
    let mut record = serde_json::json!({ "error": kind, "message": e.to_string() });
    match e {
        Error::Config { key, .. } => record["key"] = key.clone().into(),
        Error::Sampler { replication, .. } => record["replication"] = (*replication).into(),
        _ => {}
    }
    record
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = cli.command.split();
    match execute(kind, common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_record(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
