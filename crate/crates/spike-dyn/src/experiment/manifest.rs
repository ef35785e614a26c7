//! Run manifest: a JSON record of the config snapshot, seeds, emitted
//! artifacts, and wall-clock duration, written next to the artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::Result;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub experiment: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    /// Data files emitted by the run, relative to the run directory; each
    /// appears exactly once. The manifest itself is not listed.
    pub artifacts: Vec<String>,
    pub warnings: Vec<String>,
    pub wall_clock_seconds: f64,
}

/// Collects artifacts and warnings during a run and finalizes the manifest.
pub struct ManifestBuilder {
    experiment: String,
    config: ExperimentConfig,
    dir: PathBuf,
    artifacts: Vec<String>,
    warnings: Vec<String>,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(experiment: &str, config: &ExperimentConfig, dir: &Path) -> Self {
        ManifestBuilder {
            experiment: experiment.to_string(),
            config: config.clone(),
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
            warnings: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn record_artifact(&mut self, name: &str) {
        self.artifacts.push(name.to_string());
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    /// Writes `manifest.json` and returns the manifest. Fails if any listed
    /// artifact is missing from disk or listed twice.
    pub fn finish(self) -> Result<RunManifest> {
        let mut sorted = self.artifacts.clone();
        sorted.sort();
        for pair in sorted.windows(2) {
            if pair[0] == pair[1] {
                return Err(crate::error::Error::Config(format!(
                    "artifact {} listed twice in the manifest",
                    pair[0]
                )));
            }
        }
        for name in &self.artifacts {
            if !self.dir.join(name).is_file() {
                return Err(crate::error::Error::Config(format!(
                    "manifest lists missing artifact {name}"
                )));
            }
        }
        let manifest = RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            experiment: self.experiment,
            seeds: self.config.seeds.clone(),
            config: self.config,
            artifacts: self.artifacts,
            warnings: self.warnings,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        };
        crate::io::write_json(&self.dir.join(MANIFEST_FILE), &manifest)?;
        Ok(manifest)
    }
}
