//! Monte Carlo studies: margins from closed-form exposure laws, and the
//! default fund over joint member-migration and reference-default paths.
//!
//! Parallel work is split by path index and gathered in index order, and
//! every path draws from its own counter-based substream, so results do
//! not depend on the number of worker threads.

mod config;
mod df;
mod im;
mod reference;

pub use config::{
    ExperimentConfig, InitialRatings, MigrationConfig, PositionPreset, PositionsSpec,
    RatingPreset, ResolvedMigration, MAX_CONTRACTS,
};
pub use df::{
    cover1_cover2_baseline, run_df_study, run_scaling_study, scaled_books, CoverProbabilities,
    GridCell, IdentityReport, ImByAlpha, ScalingRow, ScalingStudy, StudyResult,
};
pub use im::{contract_laws, run_im_study, var_plateaus, ImRow, ImStudy, VarSegment};
pub use reference::{draw_default_days, default_days_for, sample_reference_defaults, snap_to_grid};

use thiserror::Error;

use crate::cds::CdsError;
use crate::migration::MigrationError;
use crate::prob::ProbError;
use crate::waterfall::WaterfallError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Migration {
        context: String,
        source: MigrationError,
    },
    #[error(transparent)]
    Cds(#[from] CdsError),
    #[error(transparent)]
    Waterfall(#[from] WaterfallError),
    #[error(transparent)]
    Prob(#[from] ProbError),
}

impl SimulationError {
    pub fn migration(context: &str, source: MigrationError) -> Self {
        SimulationError::Migration {
            context: context.to_string(),
            source,
        }
    }

    /// Numerical failures (calibration, infeasible joint rows) as opposed
    /// to configuration mistakes.
    pub fn is_numerical(&self) -> bool {
        match self {
            SimulationError::Migration { source, .. } => matches!(
                source,
                MigrationError::Calibration(_) | MigrationError::Infeasible { .. }
            ),
            SimulationError::Prob(_) => true,
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, SimulationError>;
