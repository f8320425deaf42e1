//! Experiment configuration.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{Result, SimulationError};
use crate::cds::{study_evaluation_date, CdsContract, PositionMatrix};
use crate::migration::{
    calibrate_daily, DependenceType, JointMigrationModel, JointState, MatrixFamily,
    MigrationPattern, Rating, RatingTransitionMatrix,
};
use crate::waterfall::WaterfallConfig;

/// More contracts than this make the `2^J` exposure enumeration impractical.
pub const MAX_CONTRACTS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PositionPreset {
    Balanced,
    Unbalanced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PositionsSpec {
    Preset(PositionPreset),
    Matrix(PositionMatrix),
}

impl PositionsSpec {
    pub fn resolve(&self) -> PositionMatrix {
        match self {
            PositionsSpec::Preset(PositionPreset::Balanced) => PositionMatrix::balanced(),
            PositionsSpec::Preset(PositionPreset::Unbalanced) => PositionMatrix::unbalanced(),
            PositionsSpec::Matrix(h) => h.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RatingPreset {
    AllOnes,
    AllSevens,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialRatings {
    Preset(RatingPreset),
    Explicit(Vec<Rating>),
}

impl InitialRatings {
    pub fn resolve(&self, members: usize) -> Result<JointState> {
        match self {
            InitialRatings::Preset(RatingPreset::AllOnes) => Ok(JointState::uniform(members, 1)),
            InitialRatings::Preset(RatingPreset::AllSevens) => Ok(JointState::uniform(members, 7)),
            InitialRatings::Explicit(r) if r.len() == members => Ok(JointState(r.clone())),
            InitialRatings::Explicit(r) => Err(SimulationError::Config(format!(
                "{} initial ratings for {members} members",
                r.len()
            ))),
        }
    }
}

/// Per-step rating dynamics. At most one of `step_matrix` and
/// `annual_matrix` may be given; otherwise `family` is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MigrationConfig {
    pub family: MatrixFamily,
    pub step_matrix: Option<RatingTransitionMatrix>,
    /// Calibrated to one grid step by the principal matrix root.
    pub annual_matrix: Option<RatingTransitionMatrix>,
    /// Ratings that may default; `3..=K-1` when absent.
    pub default_sources: Option<Vec<Rating>>,
    /// Ratings whose default blocks other upgrades under Type II; the
    /// default sources when absent.
    pub jump_triggers: Option<Vec<Rating>>,
}

impl Default for MigrationConfig {
    fn default() -> Self {
        Self {
            family: MatrixFamily::default(),
            step_matrix: None,
            annual_matrix: None,
            default_sources: None,
            jump_triggers: None,
        }
    }
}

/// The per-step matrix and the calibration error, if one was run.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedMigration {
    pub matrix: RatingTransitionMatrix,
    pub pattern: MigrationPattern,
    pub reconstruction_error: Option<f64>,
}

impl MigrationConfig {
    fn size(&self) -> usize {
        self.step_matrix
            .as_ref()
            .or(self.annual_matrix.as_ref())
            .map_or(self.family.size(), RatingTransitionMatrix::size)
    }

    pub fn pattern(&self) -> MigrationPattern {
        let mut p = MigrationPattern::standard(self.size());
        if let Some(s) = &self.default_sources {
            p.default_sources = s.clone();
            p.jump_triggers = s.clone();
        }
        if let Some(t) = &self.jump_triggers {
            p.jump_triggers = t.clone();
        }
        p
    }

    pub fn resolve(&self, steps_per_year: u32) -> Result<ResolvedMigration> {
        let pattern = self.pattern();
        match (&self.step_matrix, &self.annual_matrix) {
            (Some(_), Some(_)) => Err(SimulationError::Config(
                "give either step_matrix or annual_matrix, not both".into(),
            )),
            (Some(m), None) => {
                pattern.check(m).map_err(|e| SimulationError::migration("step matrix", e))?;
                Ok(ResolvedMigration {
                    matrix: m.clone(),
                    pattern,
                    reconstruction_error: None,
                })
            }
            (None, Some(annual)) => {
                let cal = calibrate_daily(annual, steps_per_year, &pattern)
                    .map_err(|e| SimulationError::migration("annual matrix calibration", e))?;
                Ok(ResolvedMigration {
                    matrix: cal.matrix,
                    pattern,
                    reconstruction_error: Some(cal.reconstruction_error),
                })
            }
            (None, None) => Ok(ResolvedMigration {
                matrix: self
                    .family
                    .build(&pattern)
                    .map_err(|e| SimulationError::migration("matrix family", e))?,
                pattern,
                reconstruction_error: None,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub evaluation_date: NaiveDate,
    pub contracts: Vec<CdsContract>,
    pub positions: PositionsSpec,
    /// Single-member position rows for the margin study; the rows of
    /// `positions` when absent.
    pub im_portfolios: Option<Vec<Vec<f64>>>,
    pub initial_ratings: InitialRatings,
    pub dependence: DependenceType,
    pub migration: MigrationConfig,
    pub waterfall: WaterfallConfig,
    pub paths_reference: usize,
    pub paths_migration: usize,
    /// Reference-default draws for the cover-one / cover-two baseline.
    pub cover_samples: usize,
    pub batches: usize,
    pub seed: u64,
    pub alpha_grid: Vec<f64>,
    pub beta_grid: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            evaluation_date: study_evaluation_date(),
            contracts: CdsContract::study_contracts(),
            positions: PositionsSpec::Preset(PositionPreset::Balanced),
            im_portfolios: None,
            initial_ratings: InitialRatings::Preset(RatingPreset::AllSevens),
            dependence: DependenceType::TypeI,
            migration: MigrationConfig::default(),
            waterfall: WaterfallConfig::default(),
            paths_reference: 100,
            paths_migration: 10_000,
            cover_samples: 10_000,
            batches: 20,
            seed: 20_150_922,
            alpha_grid: vec![0.005, 0.01, 0.05],
            beta_grid: vec![0.001, 0.005, 0.01, 0.05, 0.1],
        }
    }
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(SimulationError::Config(format!("{name} is empty")));
    }
    if let Some(x) = grid.iter().find(|&&x| !(x > 0.0 && x <= 1.0)) {
        return Err(SimulationError::Config(format!("{name} entry {x} outside (0, 1]")));
    }
    Ok(())
}

impl ExperimentConfig {
    /// The three single-member books of the margin study.
    pub fn study_im_portfolios() -> Vec<Vec<f64>> {
        vec![
            vec![10.0, 10.0, -1.0, -1.0],
            vec![10.0, -100.0, 5.0, 5.0],
            vec![1.0, -100.0, -100.0, -100.0],
        ]
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| SimulationError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.contracts.is_empty() || self.contracts.len() > MAX_CONTRACTS {
            return Err(SimulationError::Config(format!(
                "{} contracts; between 1 and {MAX_CONTRACTS} are supported",
                self.contracts.len()
            )));
        }
        for (j, c) in self.contracts.iter().enumerate() {
            c.validate()
                .map_err(|e| SimulationError::Config(format!("contract {}: {e}", j + 1)))?;
            if self.evaluation_date < c.inception || self.evaluation_date >= c.maturity {
                return Err(SimulationError::Config(format!(
                    "contract {} is not alive on {}",
                    j + 1,
                    self.evaluation_date
                )));
            }
        }
        let h = self.positions.resolve();
        if h.contracts() != self.contracts.len() {
            return Err(SimulationError::Config(format!(
                "positions have {} columns for {} contracts",
                h.contracts(),
                self.contracts.len()
            )));
        }
        if let Some(rows) = &self.im_portfolios {
            if let Some(r) = rows.iter().find(|r| r.len() != self.contracts.len()) {
                return Err(SimulationError::Config(format!(
                    "margin portfolio {r:?} does not have {} entries",
                    self.contracts.len()
                )));
            }
        }
        let initial = self.initial_ratings.resolve(h.members())?;
        let k = self.migration.size() as Rating;
        if let Some(r) = initial.0.iter().find(|&&r| r == 0 || r >= k) {
            return Err(SimulationError::Config(format!(
                "initial rating {r} must be a non-default rating in 1..{k}"
            )));
        }
        self.waterfall.validate()?;
        if self.waterfall.tenors.step as f64 > crate::cds::BUSINESS_DAYS_PER_YEAR {
            return Err(SimulationError::Config("grid step longer than a year".into()));
        }
        if self.paths_reference == 0 || self.paths_migration == 0 || self.cover_samples == 0 {
            return Err(SimulationError::Config("path counts must be positive".into()));
        }
        if self.batches < 2 || self.batches > self.paths_migration {
            return Err(SimulationError::Config(format!(
                "batches = {} must lie in [2, paths_migration]",
                self.batches
            )));
        }
        check_grid("alpha_grid", &self.alpha_grid)?;
        check_grid("beta_grid", &self.beta_grid)?;
        Ok(())
    }

    pub fn steps_per_year(&self) -> u32 {
        (crate::cds::BUSINESS_DAYS_PER_YEAR / self.waterfall.tenors.step as f64).round() as u32
    }

    pub fn joint_model(&self) -> Result<(JointMigrationModel, Option<f64>)> {
        let resolved = self.migration.resolve(self.steps_per_year())?;
        let members = self.positions.resolve().members();
        let model = JointMigrationModel::homogeneous(
            members,
            resolved.matrix,
            self.dependence,
            resolved.pattern,
        )
        .map_err(|e| SimulationError::migration("joint model", e))?;
        Ok((model, resolved.reconstruction_error))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn parses_presets_and_overrides() {
        let cfg = ExperimentConfig::from_json(
            r#"{"positions": "UNBALANCED", "initial_ratings": "ALL_ONES",
                "dependence": "TYPE_III", "paths_migration": 100, "batches": 10}"#,
        )
        .unwrap();
        assert_eq!(cfg.positions.resolve(), PositionMatrix::unbalanced());
        assert_eq!(cfg.initial_ratings.resolve(8).unwrap(), JointState::uniform(8, 1));
        assert_eq!(cfg.dependence, DependenceType::TypeIII);
        let explicit = ExperimentConfig::from_json(
            r#"{"positions": [[1, 0, 0, 0], [-1, 0, 0, 0]], "initial_ratings": [3, 4]}"#,
        )
        .unwrap();
        assert_eq!(explicit.positions.resolve().members(), 2);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            r#"{"dependence": "TYPE_IV"}"#,
            r#"{"positions": [[1, 0, 0, 0], [1, 0, 0, 0]]}"#,
            r#"{"initial_ratings": [1, 2]}"#,
            r#"{"initial_ratings": "ALL_EIGHTS"}"#,
            r#"{"beta_grid": [0.0]}"#,
            r#"{"alpha_grid": []}"#,
            r#"{"paths_reference": 0}"#,
            r#"{"unknown_field": 1}"#,
            r#"{"evaluation_date": "2019-01-02"}"#,
        ] {
            assert!(ExperimentConfig::from_json(text).is_err(), "{text}");
        }
    }
}
