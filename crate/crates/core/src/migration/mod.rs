//! Credit-rating migration of clearing members.
//!
//! Each member's rating is a time-homogeneous Markov chain on `1..=K` with
//! `K` the absorbing default state. The joint chain over all members is
//! built one row at a time (the full `K^I` matrix is never materialized)
//! and is constrained so every component keeps its own marginal transition
//! law.

mod calibration;
mod joint;
mod matrix;
mod path;

pub use calibration::{calibrate_daily, compound, matrix_power, Calibration};
pub use joint::{
    joint_transition_row, ComonotoneOutcome, ConditionalMoves, DependenceType, JointMigrationModel,
    JointRow, JointState, LocalRow, MemberMoves, Move,
};
pub use matrix::{MatrixFamily, MigrationPattern, Rating, RatingTransitionMatrix};
pub use path::{
    simulate_default_times, simulate_path, simulate_path_with, survival_indicator, MigrationPath,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MigrationError {
    #[error("invalid transition matrix: {0}")]
    InvalidMatrix(String),
    #[error("transition ({from} -> {to}) violates the migration pattern: p = {prob:e}")]
    PatternViolation { from: Rating, to: Rating, prob: f64 },
    #[error("invalid joint state: {0}")]
    InvalidState(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("infeasible joint row for member {member}, direction {direction}: {detail}")]
    Infeasible {
        member: usize,
        direction: &'static str,
        detail: String,
    },
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("matrix input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, MigrationError>;
