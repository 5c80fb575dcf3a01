use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sgdct::{run_experiment, Experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "sgdct", version, about = "Stochastic gradient descent in continuous time: estimation and verification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a data path, or replay an observed one through the estimator
    Simulate(Flags),
    /// Run replications and dump each trajectory
    Estimate(Flags),
    /// Predict the limiting covariance by both routes
    PredictCovariance(Flags),
    /// Solve the Poisson equation for a scalar model
    PoissonSolve(Flags),
    /// Measure the L^p convergence rate
    VerifyRate(Flags),
    /// Compare the rescaled error with the predicted normal law
    VerifyClt(Flags),
    /// Measure the L^2 rate across learning-rate magnitudes
    RegimeSweep(Flags),
}

#[derive(clap::Args)]
struct Flags {
    /// Configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.dir`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides `run.master_seed`)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 for all cores (overrides `run.parallelism`)
    #[arg(long)]
    parallelism: Option<usize>,
}

impl Command {
    fn split(self) -> (Experiment, Flags) {
        match self {
            Command::Simulate(f) => (Experiment::Simulate, f),
            Command::Estimate(f) => (Experiment::Estimate, f),
            Command::PredictCovariance(f) => (Experiment::PredictCovariance, f),
            Command::PoissonSolve(f) => (Experiment::PoissonSolve, f),
            Command::VerifyRate(f) => (Experiment::VerifyRate, f),
            Command::VerifyClt(f) => (Experiment::VerifyClt, f),
            Command::RegimeSweep(f) => (Experiment::RegimeSweep, f),
        }
    }
}

fn main() -> ExitCode {
    let (experiment, flags) = Cli::parse().command.split();
    let text = match std::fs::read_to_string(&flags.config) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("error: {}: {e}", flags.config.display());
            return ExitCode::from(2);
        }
    };
    let mut cfg = match ExperimentConfig::parse_str(&text, Some(experiment)) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {}: {e}", flags.config.display());
            return ExitCode::from(2);
        }
    };
    if let Some(out) = flags.out {
        cfg.output_dir = out;
    }
    if let Some(seed) = flags.seed {
        cfg.master_seed = seed;
    }
    if let Some(p) = flags.parallelism {
        cfg.parallelism = p;
    }

    let report = run_experiment(&cfg);
    for v in &report.verdicts {
        let measured = v.measured.map_or_else(|| "n/a".to_string(), |m| format!("{m:.6}"));
        let bound = |b: Option<f64>, inf: &str| b.map_or_else(|| inf.to_string(), |b| format!("{b}"));
        println!(
            "{} {:<32} {measured:>14}  [{}, {}]",
            if v.pass { "PASS" } else { "FAIL" },
            v.id,
            bound(v.band.0, "-inf"),
            bound(v.band.1, "inf"),
        );
    }
    if let Some(err) = &report.error {
        eprintln!("error ({}): {}", err.kind, err.message);
    }
    println!("report: {}", cfg.output_dir.join("report.json").display());
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
