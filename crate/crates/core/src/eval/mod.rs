//! Matching, interpolated AP, mAP across classes and difficulty levels,
//! error breakdown and report tables.

mod ap;
mod breakdown;
mod matching;
mod report;

use thiserror::Error;

pub use ap::{average_precision, Interpolation, PRCurve, PrPoint};
pub use breakdown::{error_breakdown, ErrorBreakdown};
pub use matching::{match_class_agnostic, match_frame, MatchResult, MatchedPair};
pub use report::{
    compare_reports, evaluate, fill_box2d, format_change, render_comparison, render_report,
    CellStats, ChangeCell, EvalConfig, EvalReport,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("detections reference unknown frame '{0}'")]
    UnknownFrame(String),
    #[error("class '{0}' is not in the taxonomy")]
    UnknownClass(String),
    #[error("frame '{0}' has ground truth without a 2D box; difficulty cannot be assigned")]
    MissingBox2d(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("report structure mismatch: {0}")]
    StructureMismatch(String),
    #[error("IoU threshold {0} must lie in (0, 1]")]
    InvalidThreshold(f64),
    #[error("invalid report: {0}")]
    Report(String),
}
