use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use spike_dyn::experiment::{self, ExperimentConfig, ExperimentKind, ValidationOptions};
use spike_dyn::Error;

/// Experiment driver for two-phase learning dynamics and ridgeless risk on
/// spiked-covariance data.
#[derive(Parser)]
#[command(name = "spike-dyn", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON experiment configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Number of worker threads for trial-level parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Exit non-zero when a validation check fails.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Phase-plane data: trajectories, vector field, nullclines, basis.
    Fig1,
    /// Loss and weight-component evolution with both timescales.
    Fig2,
    /// Normalized training-loss sweep over rho or alignment.
    Fig3,
    /// Normalized ridgeless risk over an (alignment, rho) grid.
    Fig4,
    /// Theory-vs-simulation risk as a function of gamma = d/n.
    Fig5,
    /// Run the cross-cutting invariant suite.
    Validate,
    /// Combined single-setting run (phase plane + evolution artifacts).
    Custom,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::InvalidParameter(_) => ExitCode::from(2),
                Error::Divergence(_) => ExitCode::from(3),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default(),
    };
    experiment::apply_seed_env(&mut cfg)?;
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(threads) = cli.threads {
        cfg.threads = Some(threads);
    }

    if let Command::Validate = cli.command {
        let dir = cfg.output_dir.join("validate");
        std::fs::create_dir_all(&dir)?;
        let (_, report) =
            experiment::validate::run_and_write(&cfg, &dir, ValidationOptions::default())?;
        for check in &report.checks {
            let status = if check.passed { "PASS" } else { "FAIL" };
            println!("{status} {} — {}", check.name, check.detail);
        }
        println!(
            "validation: {}/{} checks passed; report at {}",
            report.checks.iter().filter(|c| c.passed).count(),
            report.checks.len(),
            dir.join("validation.json").display()
        );
        if !report.all_passed && cli.strict {
            return Ok(ExitCode::from(4));
        }
        return Ok(ExitCode::SUCCESS);
    }

    let kind = match cli.command {
        Command::Fig1 => ExperimentKind::Fig1PhasePlane,
        Command::Fig2 => ExperimentKind::Fig2WeightEvolution,
        Command::Fig3 => ExperimentKind::Fig3LossSweep,
        Command::Fig4 => ExperimentKind::Fig4RiskColormap,
        Command::Fig5 => ExperimentKind::Fig5RiskVsGamma,
        Command::Custom => ExperimentKind::Custom,
        Command::Validate => unreachable!(),
    };
    let manifest = experiment::run(kind, &cfg)?;
    println!(
        "{}: wrote {} artifact(s) to {} in {:.2}s",
        manifest.experiment,
        manifest.artifacts.len(),
        experiment::run_dir(&cfg, kind).display(),
        manifest.wall_clock_seconds
    );
    for warning in &manifest.warnings {
        println!("warning: {warning}");
    }
    Ok(ExitCode::SUCCESS)
}
