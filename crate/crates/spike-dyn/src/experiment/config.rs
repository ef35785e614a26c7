//! Experiment configuration: a single JSON document with fail-fast parsing
//! (unknown keys are errors) and paper-caption defaults where the captions
//! state them, desk-scale substitutes where they do not.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear_net::MomentSource;

/// Which standard experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Fig1PhasePlane,
    Fig2WeightEvolution,
    Fig3LossSweep,
    Fig4RiskColormap,
    Fig5RiskVsGamma,
    Custom,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Fig1PhasePlane => "fig1_phase_plane",
            ExperimentKind::Fig2WeightEvolution => "fig2_weight_evolution",
            ExperimentKind::Fig3LossSweep => "fig3_loss_sweep",
            ExperimentKind::Fig4RiskColormap => "fig4_risk_colormap",
            ExperimentKind::Fig5RiskVsGamma => "fig5_risk_vs_gamma",
            ExperimentKind::Custom => "custom",
        }
    }
}

/// Model parameters. Defaults are the standard phase-plane setting
/// (`d = 30`, `m = 50`, `n = 10^4`, `sigma2 = 1`, `rho = 20`, `A = 0.3`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "defaults::d")]
    pub d: usize,
    #[serde(default = "defaults::m")]
    pub m: usize,
    #[serde(default = "defaults::n")]
    pub n: usize,
    #[serde(default = "defaults::sigma2")]
    pub sigma2: f64,
    #[serde(default = "defaults::rho")]
    pub rho: f64,
    #[serde(default = "defaults::alignment")]
    pub alignment: f64,
    /// Optional seed for a random orthogonal rotation of `(mu, beta)`.
    #[serde(default)]
    pub rotate_seed: Option<u64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d: defaults::d(),
            m: defaults::m(),
            n: defaults::n(),
            sigma2: defaults::sigma2(),
            rho: defaults::rho(),
            alignment: defaults::alignment(),
            rotate_seed: None,
        }
    }
}

/// Training parameters. The captions do not state a step size; the default
/// sits well inside the stability guard for the default model (keeping the
/// discrete trajectory close to the flow the theory describes) and is
/// covered by the step-halving flow checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    #[serde(default = "defaults::eta")]
    pub eta: f64,
    #[serde(default = "defaults::s")]
    pub s: f64,
    #[serde(default = "defaults::max_steps")]
    pub max_steps: usize,
    #[serde(default = "defaults::record_every")]
    pub record_every: usize,
    #[serde(default = "defaults::delta")]
    pub delta: f64,
    #[serde(default = "defaults::moments")]
    pub moments: MomentSource,
    #[serde(default)]
    pub stop_loss: Option<f64>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            eta: defaults::eta(),
            s: defaults::s(),
            max_steps: defaults::max_steps(),
            record_every: defaults::record_every(),
            delta: defaults::delta(),
            moments: defaults::moments(),
            stop_loss: None,
        }
    }
}

/// Phase-plane evaluation grid override.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub w1_min: f64,
    pub w1_max: f64,
    pub w2_min: f64,
    pub w2_max: f64,
    pub n1: usize,
    pub n2: usize,
}

/// Full experiment configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional; when present it must agree with the subcommand.
    #[serde(default)]
    pub experiment: Option<ExperimentKind>,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub training: TrainingConfig,
    /// Sweep values for the spike magnitude (fig3/fig5 grids, fig4 rows).
    #[serde(default)]
    pub rho_list: Vec<f64>,
    /// Sweep values for the alignment (fig3/fig5 grids, fig4 columns).
    #[serde(default)]
    pub alignment_list: Vec<f64>,
    /// Overparameterization ratios (fig4 expects exactly one, fig5 a list).
    #[serde(default)]
    pub gamma_list: Vec<f64>,
    /// Per-trial seeds; single-run experiments use the first entry.
    #[serde(default = "defaults::seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "defaults::output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub threads: Option<usize>,
    /// Input dimension for the risk experiments (desk-scale default 600;
    /// the full-scale 3000 is an explicit override).
    #[serde(default = "defaults::risk_dim")]
    pub risk_dim: usize,
    /// Grid resolution per axis for the risk colormap.
    #[serde(default = "defaults::risk_grid")]
    pub risk_grid: usize,
    /// Phase-plane field grid override.
    #[serde(default)]
    pub grid: Option<GridConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config deserializes to defaults")
    }
}

mod defaults {
    use super::MomentSource;
    use std::path::PathBuf;

    pub fn d() -> usize {
        30
    }
    pub fn m() -> usize {
        50
    }
    pub fn n() -> usize {
        10_000
    }
    pub fn sigma2() -> f64 {
        1.0
    }
    pub fn rho() -> f64 {
        20.0
    }
    pub fn alignment() -> f64 {
        0.3
    }
    pub fn eta() -> f64 {
        5e-4
    }
    pub fn s() -> f64 {
        1e-5
    }
    pub fn max_steps() -> usize {
        24_000
    }
    pub fn record_every() -> usize {
        20
    }
    pub fn delta() -> f64 {
        3.0
    }
    pub fn moments() -> MomentSource {
        MomentSource::Empirical
    }
    pub fn seeds() -> Vec<u64> {
        (0..10).collect()
    }
    pub fn output_dir() -> PathBuf {
        PathBuf::from("runs")
    }
    pub fn risk_dim() -> usize {
        600
    }
    pub fn risk_grid() -> usize {
        50
    }
}

impl ExperimentConfig {
    /// Parses a config file, rejecting unknown keys.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Re-derives the per-trial seed list from a base seed (used by the
    /// `SPIKE_DYN_SEED` environment override); trial `i` gets `base + i`.
    pub fn override_seed_base(&mut self, base: u64) {
        let count = self.seeds.len().max(1);
        self.seeds = (0..count as u64).map(|i| base.wrapping_add(i)).collect();
    }

    /// Structural validation shared by all experiments; per-experiment
    /// preconditions are checked by the runners.
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds list must be non-empty".into()));
        }
        if self.model.d < 2 || self.model.m < self.model.d {
            return Err(Error::Config(format!(
                "need m >= d >= 2, got d = {}, m = {}",
                self.model.d, self.model.m
            )));
        }
        if self.model.n == 0 {
            return Err(Error::Config("n must be positive".into()));
        }
        if !(self.model.sigma2 > 0.0)
            || !(self.model.rho >= 0.0)
            || !(0.0..=1.0).contains(&self.model.alignment)
        {
            return Err(Error::Config(format!(
                "invalid model parameters: sigma2 = {}, rho = {}, alignment = {}",
                self.model.sigma2, self.model.rho, self.model.alignment
            )));
        }
        for rho in &self.rho_list {
            if !(*rho >= 0.0) {
                return Err(Error::Config(format!("rho_list entry {rho} < 0")));
            }
        }
        for a in &self.alignment_list {
            if !(0.0..=1.0).contains(a) {
                return Err(Error::Config(format!(
                    "alignment_list entry {a} outside [0, 1]"
                )));
            }
        }
        if !(self.training.eta > 0.0)
            || !(self.training.s > 0.0)
            || self.training.max_steps == 0
            || self.training.record_every == 0
            || !(self.training.delta > 0.0)
        {
            return Err(Error::Config(format!(
                "invalid training parameters: eta = {}, s = {}, max_steps = {}, record_every = {}, delta = {}",
                self.training.eta,
                self.training.s,
                self.training.max_steps,
                self.training.record_every,
                self.training.delta
            )));
        }
        if self.risk_dim < 2 || self.risk_grid < 2 {
            return Err(Error::Config(format!(
                "risk_dim = {}, risk_grid = {}: both must be at least 2",
                self.risk_dim, self.risk_grid
            )));
        }
        Ok(())
    }
}
