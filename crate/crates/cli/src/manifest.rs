//! Run manifests: everything needed to reproduce a set of outputs.

use std::fs;
use std::path::Path;

use ccp_risk::migration::{Rating, RatingTransitionMatrix};
use ccp_risk::simulation::ExperimentConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

/// The engine operation of a run with its fully resolved inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Job {
    Calibrate {
        annual_matrix: RatingTransitionMatrix,
        steps: u32,
        default_sources: Option<Vec<Rating>>,
        jump_triggers: Option<Vec<Rating>>,
    },
    Im {
        config: ExperimentConfig,
        emit_distributions: bool,
    },
    Df {
        config: ExperimentConfig,
    },
    Scaling {
        config: ExperimentConfig,
        counts: Vec<usize>,
    },
}

impl Job {
    pub fn command(&self) -> &'static str {
        match self {
            Job::Calibrate { .. } => "calibrate",
            Job::Im { .. } => "im",
            Job::Df { .. } => "df",
            Job::Scaling { .. } => "scaling",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Job::Calibrate { .. } | Job::Im { .. } => None,
            Job::Df { config } | Job::Scaling { config, .. } => Some(config.seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Input file the run was started from (config JSON or matrix CSV).
    pub config_path: String,
    pub seed: Option<u64>,
    pub out_dir: String,
    pub engine_version: String,
    pub timestamp: String,
    /// Files written next to the manifest.
    pub outputs: Vec<String>,
    pub job: Job,
}

impl RunManifest {
    pub fn new(job: Job, config_path: &Path, out_dir: &Path, outputs: Vec<String>) -> Self {
        Self {
            command: job.command().to_string(),
            config_path: config_path.display().to_string(),
            seed: job.seed(),
            out_dir: out_dir.display().to_string(),
            engine_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            outputs,
            job,
        }
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        let path = out_dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&path, text).map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: not a run manifest: {e}", path.display())))
    }
}
