//! Experiment orchestration: config parsing, the standard runners, the
//! validation suite, and run manifests.
//!
//! Every runner writes its artifacts into a per-run directory
//! `<output_dir>/<experiment>/`, verifies each file against its schema after
//! writing, and finishes with a `manifest.json` listing every emitted data
//! file exactly once. Identical configs and seeds produce byte-identical
//! data files (the manifest additionally records wall-clock time).

pub mod config;
pub mod figures;
pub mod manifest;
pub mod validate;

pub use config::{ExperimentConfig, ExperimentKind};
pub use manifest::RunManifest;
pub use validate::{ValidationOptions, ValidationReport};

use crate::error::{Error, Result};
use std::path::PathBuf;

/// Environment variable that overrides the seed base; trial `i` then runs
/// with seed `base + i`.
pub const SEED_ENV_VAR: &str = "SPIKE_DYN_SEED";

/// Applies the `SPIKE_DYN_SEED` override when the variable is set.
pub fn apply_seed_env(cfg: &mut ExperimentConfig) -> Result<()> {
    if let Ok(raw) = std::env::var(SEED_ENV_VAR) {
        let base: u64 = raw
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_ENV_VAR}={raw} is not a valid u64")))?;
        cfg.override_seed_base(base);
    }
    Ok(())
}

/// The directory a run writes into.
pub fn run_dir(cfg: &ExperimentConfig, kind: ExperimentKind) -> PathBuf {
    cfg.output_dir.join(kind.name())
}

/// Runs one experiment end to end and returns its manifest.
pub fn run(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<RunManifest> {
    cfg.validate()?;
    if let Some(declared) = cfg.experiment {
        if declared != kind {
            return Err(Error::Config(format!(
                "config declares experiment {} but {} was requested",
                declared.name(),
                kind.name()
            )));
        }
    }
    if let Some(threads) = cfg.threads {
        // per-trial seeds make parallel and serial runs identical, so a
        // failure to resize an already-built global pool is harmless
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let dir = run_dir(cfg, kind);
    std::fs::create_dir_all(&dir)?;
    match kind {
        ExperimentKind::Fig1PhasePlane => figures::run_fig1(cfg, &dir),
        ExperimentKind::Fig2WeightEvolution => figures::run_fig2(cfg, &dir),
        ExperimentKind::Fig3LossSweep => figures::run_fig3(cfg, &dir),
        ExperimentKind::Fig4RiskColormap => figures::run_fig4(cfg, &dir),
        ExperimentKind::Fig5RiskVsGamma => figures::run_fig5(cfg, &dir),
        ExperimentKind::Custom => figures::run_custom(cfg, &dir),
    }
}
