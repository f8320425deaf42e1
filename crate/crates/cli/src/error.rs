use std::path::PathBuf;

use ccp_risk::migration::MigrationError;
use ccp_risk::simulation::SimulationError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error(transparent)]
    Migration(#[from] MigrationError),
    #[error("replay differs from the recorded run: {0}")]
    ReplayMismatch(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for configuration and usage problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Simulation(e) if e.is_numerical() => 3,
            CliError::Simulation(_) => 2,
            CliError::Migration(MigrationError::Calibration(_) | MigrationError::Infeasible { .. }) => 3,
            CliError::Migration(_) => 2,
            CliError::ReplayMismatch(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
