//! Label, manifest and calibration file formats.
//!
//! * `kitti_ext`, whitespace-separated label lines:
//!   `class trunc occl alpha x1 y1 x2 y2 h w l x y z yaw [pitch roll] [score]`.
//!   The location `x y z` is the geometric box center in camera axes. A line
//!   with 16 columns carries a score and no pitch/roll; 17 columns carry
//!   pitch/roll; 18 carry both. A missing 2D box is written as `-1 -1 -1 -1`.
//! * manifest JSON: one document per dataset (see [`DatasetManifest`]).
//! * calibration JSON: intrinsics plus frame-labeled rigid transforms.
//!
//! Numbers are written with 6 significant digits in fixed notation, so
//! `write → parse → write` is byte-stable.

mod calibration;
mod kitti;
mod manifest;
mod stats;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{CameraError, Rect2D};
use crate::geometry::{Box3D, GeometryError};

pub use calibration::{parse_calibration, write_calibration, Calibration};
pub use kitti::{parse_kitti, write_kitti};
pub use manifest::{parse_manifest, write_manifest, ClassMapping, DatasetManifest, FrameRecord};
pub use stats::{dataset_stats, format_count, DatasetStats};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("line {line}, column {column} (field \"{field}\"): {message}")]
    Parse {
        line: usize,
        column: usize,
        field: &'static str,
        message: String,
    },
    #[error("validation failed{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Validation {
        line: Option<usize>,
        message: String,
    },
    #[error("cannot serialize: {0}")]
    Serialization(String),
    #[error("JSON error at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("calibration error: {0}")]
    Calibration(String),
}

impl FormatError {
    pub(crate) fn validation(line: Option<usize>, message: impl fmt::Display) -> Self {
        Self::Validation {
            line,
            message: message.to_string(),
        }
    }
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        Self::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

impl From<GeometryError> for FormatError {
    fn from(e: GeometryError) -> Self {
        Self::validation(None, e)
    }
}

impl From<CameraError> for FormatError {
    fn from(e: CameraError) -> Self {
        Self::validation(None, e)
    }
}

/// Label file formats accepted by [`parse_labels`] and [`write_labels`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelFormat {
    KittiExt,
    /// A JSON array of annotation objects (manifest schema, optional `score`).
    ManifestJson,
}

impl std::str::FromStr for LabelFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "kitti_ext" | "kitti" => Ok(Self::KittiExt),
            "manifest_json" | "json" => Ok(Self::ManifestJson),
            other => Err(format!(
                "unknown label format '{other}' (expected kitti_ext or manifest_json)"
            )),
        }
    }
}

/// KITTI occlusion state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Occlusion {
    #[default]
    FullyVisible = 0,
    Partly = 1,
    Heavily = 2,
    Unknown = 3,
}

impl Occlusion {
    pub fn code(self) -> u8 {
        self as u8
    }
}

impl TryFrom<i64> for Occlusion {
    type Error = String;

    fn try_from(v: i64) -> Result<Self, Self::Error> {
        match v {
            0 => Ok(Self::FullyVisible),
            1 => Ok(Self::Partly),
            2 => Ok(Self::Heavily),
            3 => Ok(Self::Unknown),
            _ => Err(format!("occlusion {v} out of range 0..=3")),
        }
    }
}

impl Serialize for Occlusion {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.code())
    }
}

impl<'de> Deserialize<'de> for Occlusion {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        Occlusion::try_from(v).map_err(serde::de::Error::custom)
    }
}

fn default_alpha() -> f64 {
    -10.0
}

/// A ground-truth object in a frame (camera-frame box).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub class_name: String,
    pub truncation: f64,
    pub occlusion: Occlusion,
    /// Observation angle, carried through from KITTI-style files.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub box2d: Option<Rect2D>,
    pub box3d: Box3D,
    #[serde(default)]
    pub frame_id: String,
}

impl AnnotationRecord {
    pub fn new(class_name: impl Into<String>, box3d: Box3D, frame_id: impl Into<String>) -> Self {
        Self {
            class_name: class_name.into(),
            truncation: 0.0,
            occlusion: Occlusion::FullyVisible,
            alpha: default_alpha(),
            box2d: None,
            box3d,
            frame_id: frame_id.into(),
        }
    }

    pub(crate) fn validate(&self, line: Option<usize>) -> Result<(), FormatError> {
        if self.class_name.is_empty() || self.class_name.chars().any(char::is_whitespace) {
            return Err(FormatError::validation(
                line,
                format!(
                    "class name '{}' is empty or contains whitespace",
                    self.class_name
                ),
            ));
        }
        if !(0.0..=1.0).contains(&self.truncation) {
            return Err(FormatError::validation(
                line,
                format!("truncation {} outside [0, 1]", self.truncation),
            ));
        }
        let b = &self.box3d;
        Box3D::new(b.center, b.dims, b.orientation)
            .map_err(|e| FormatError::validation(line, e))?;
        Ok(())
    }
}

/// A scored prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    #[serde(flatten)]
    pub annotation: AnnotationRecord,
    pub score: f64,
}

impl DetectionRecord {
    pub fn new(annotation: AnnotationRecord, score: f64) -> Self {
        Self { annotation, score }
    }

    pub fn class_name(&self) -> &str {
        &self.annotation.class_name
    }

    pub fn box3d(&self) -> &Box3D {
        &self.annotation.box3d
    }
}

/// One parsed label entry: a detection when a score is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    #[serde(flatten)]
    pub annotation: AnnotationRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl LabelRecord {
    pub fn into_detection(self) -> Option<DetectionRecord> {
        let score = self.score?;
        Some(DetectionRecord::new(self.annotation, score))
    }
}

impl From<AnnotationRecord> for LabelRecord {
    fn from(annotation: AnnotationRecord) -> Self {
        Self {
            annotation,
            score: None,
        }
    }
}

impl From<DetectionRecord> for LabelRecord {
    fn from(d: DetectionRecord) -> Self {
        Self {
            annotation: d.annotation,
            score: Some(d.score),
        }
    }
}

fn validate_score(score: Option<f64>, line: Option<usize>) -> Result<(), FormatError> {
    match score {
        Some(s) if !(0.0..=1.0).contains(&s) => Err(FormatError::validation(
            line,
            format!("score {s} outside [0, 1]"),
        )),
        _ => Ok(()),
    }
}

/// Parses a label file. `frame_id` is attached to records that do not carry
/// one themselves.
pub fn parse_labels(
    text: &str,
    format: LabelFormat,
    frame_id: &str,
) -> Result<Vec<LabelRecord>, FormatError> {
    match format {
        LabelFormat::KittiExt => parse_kitti(text, frame_id),
        LabelFormat::ManifestJson => {
            let mut records: Vec<LabelRecord> = serde_json::from_str(text)?;
            for (i, r) in records.iter_mut().enumerate() {
                if r.annotation.frame_id.is_empty() {
                    r.annotation.frame_id = frame_id.to_string();
                }
                r.annotation.validate(Some(i + 1))?;
                validate_score(r.score, Some(i + 1))?;
                let b = r.annotation.box3d;
                r.annotation.box3d = Box3D::new(b.center, b.dims, b.orientation)?;
            }
            Ok(records)
        }
    }
}

pub fn write_labels(records: &[LabelRecord], format: LabelFormat) -> Result<String, FormatError> {
    match format {
        LabelFormat::KittiExt => write_kitti(records),
        LabelFormat::ManifestJson => {
            for r in records {
                r.annotation
                    .validate(None)
                    .map_err(|e| FormatError::Serialization(e.to_string()))?;
            }
            let mut s = serde_json::to_string_pretty(records)
                .map_err(|e| FormatError::Serialization(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
    }
}

/// Fixed-notation decimal with 6 significant digits, trailing zeros trimmed.
pub fn format_number(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() {
            "0".to_string()
        } else {
            x.to_string()
        };
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (5 - exponent).max(0) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        s = s.trim_end_matches('0').trim_end_matches('.').to_string();
    }
    if s == "-0" {
        s = "0".to_string();
    }
    s
}
