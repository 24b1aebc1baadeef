use std::fmt;

use serde::{Deserialize, Serialize};

use crate::formats::{AnnotationRecord, Occlusion};

/// KITTI-style difficulty strata; membership is cumulative, so an `Easy`
/// object also counts for `Moderate` and `Hard`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DifficultyLevel {
    Easy,
    Moderate,
    Hard,
    Ignored,
}

impl DifficultyLevel {
    pub const EVALUATED: [DifficultyLevel; 3] = [Self::Easy, Self::Moderate, Self::Hard];

    /// Whether an object of level `object` is counted when evaluating `self`.
    pub fn includes(self, object: DifficultyLevel) -> bool {
        object != Self::Ignored && object <= self
    }
}

impl fmt::Display for DifficultyLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Easy => "Easy",
            Self::Moderate => "Moderate",
            Self::Hard => "Hard",
            Self::Ignored => "Ignored",
        })
    }
}

/// Per-level thresholds: (max occlusion, max truncation, min 2D height px).
pub const DIFFICULTY_THRESHOLDS: [(DifficultyLevel, Occlusion, f64, f64); 3] = [
    (DifficultyLevel::Easy, Occlusion::FullyVisible, 0.15, 40.0),
    (DifficultyLevel::Moderate, Occlusion::Partly, 0.30, 25.0),
    (DifficultyLevel::Hard, Occlusion::Heavily, 0.50, 25.0),
];

/// The easiest level whose occlusion, truncation and height limits the
/// object satisfies, or `Ignored`.
pub fn assign_difficulty(a: &AnnotationRecord, projected_height: f64) -> DifficultyLevel {
    DIFFICULTY_THRESHOLDS
        .iter()
        .find(|(_, occl, trunc, height)| {
            a.occlusion <= *occl && a.truncation <= *trunc && projected_height >= *height
        })
        .map_or(DifficultyLevel::Ignored, |(level, ..)| *level)
}
