//! Train/test splits, difficulty strata and transfer-experiment plans.

mod difficulty;
mod plan;
mod split;

use thiserror::Error;

pub use difficulty::{assign_difficulty, DifficultyLevel, DIFFICULTY_THRESHOLDS};
pub use plan::{build_experiment_plan, DatasetRef, DatasetRegistry, ExperimentPlan, PlanKind};
pub use split::{make_split, make_stratified_split, SplitMix64, SplitRole, SplitSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("train fraction {0} must lie strictly between 0 and 1")]
    InvalidFraction(f64),
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error("dataset '{0}' is not registered")]
    Registry(String),
    #[error("invalid split file: {0}")]
    Split(String),
}
