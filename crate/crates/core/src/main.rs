use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nlplap::lab::{self, ExperimentConfig, ExperimentKind, Report};
use nlplap::{kernel, Error, Result};

/// Nonlocal p-Laplacian energies, solvers and limit checks.
#[derive(Parser, Debug)]
#[command(name = "nlplap", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the normalization constant C_N for dimension N and exponent p.
    Cn {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        p: f64,
    },
    /// Run a horizon sweep (ponce_sweep, measurable_check, simple_check or cn_table).
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output directory, overriding [output].dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a convergence study of nonlocal solutions to the local one.
    Gconv {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the partition estimate on dyadic covers.
    Vitali {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in fixture matrix.
    Check {
        #[arg(long)]
        all: bool,
        /// Write every report into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Outcome of a command that ran to completion.
enum Outcome {
    Pass,
    VerdictFailure,
}

fn run_config(path: &PathBuf, out: &Option<PathBuf>, allowed: &[ExperimentKind]) -> Result<Outcome> {
    let mut cfg = ExperimentConfig::load(path)?;
    if !allowed.contains(&cfg.experiment) {
        let names: Vec<&str> = allowed.iter().map(|k| k.id()).collect();
        return Err(Error::Config(format!(
            "experiment {} is not handled by this subcommand (expected one of {})",
            cfg.experiment.id(),
            names.join(", ")
        )));
    }
    if out.is_some() {
        cfg.output.dir = out.clone();
    }
    let report = lab::run(&cfg)?;
    finish(&report, &cfg)
}

fn finish(report: &Report, cfg: &ExperimentConfig) -> Result<Outcome> {
    print!("{}", report.summary());
    for path in lab::write_outputs(report, &cfg.output)? {
        println!("  wrote {}", path.display());
    }
    Ok(if report.passed() { Outcome::Pass } else { Outcome::VerdictFailure })
}

fn check_all(out: &Option<PathBuf>) -> Result<Outcome> {
    let mut failed = 0;
    let configs = lab::fixture_matrix();
    let total = configs.len();
    for mut cfg in configs {
        cfg.output.dir = out.clone();
        let report = lab::run(&cfg)?;
        lab::write_outputs(&report, &cfg.output)?;
        let tag = if report.passed() { "PASS" } else { "FAIL" };
        println!("[{tag}] {}", report.name);
        if !report.passed() {
            failed += 1;
            print!("{}", report.summary());
        }
    }
    println!("{} of {total} experiments passed", total - failed);
    Ok(if failed == 0 { Outcome::Pass } else { Outcome::VerdictFailure })
}

fn execute(cli: Cli) -> Result<Outcome> {
    use ExperimentKind::*;
    match cli.command {
        Command::Cn { dim, p } => {
            println!("{}", kernel::c_n(dim, p)?);
            Ok(Outcome::Pass)
        }
        Command::Sweep { config, out } => run_config(&config, &out, &[PonceSweep, MeasurableCheck, SimpleCheck, CnTable]),
        Command::Gconv { config, out } => run_config(&config, &out, &[Gconv]),
        Command::Vitali { config, out } => run_config(&config, &out, &[VitaliCheck]),
        Command::Check { all, out } => {
            if !all {
                return Err(Error::Config("check needs --all".into()));
            }
            check_all(&out)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::VerdictFailure) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
