use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::camera::{CameraError, Intrinsics, RigidTransform};
use crate::geometry::RotationMatrix;

use super::FormatError;

/// Rotation matrices read from files must be orthonormal within this.
pub const CALIBRATION_ROTATION_TOL: f64 = 1e-6;

#[derive(Debug, Serialize, Deserialize)]
struct RawTransform {
    source: String,
    target: String,
    #[serde(rename = "R")]
    rotation: Vec<f64>,
    t: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawCalibration {
    #[serde(rename = "K")]
    k: Option<Vec<f64>>,
    image_size: Option<[u32; 2]>,
    #[serde(default)]
    transforms: Vec<RawTransform>,
}

/// Camera intrinsics plus the sensor-pair extrinsics of one rig.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub intrinsics: Intrinsics,
    pub transforms: Vec<RigidTransform>,
}

impl Calibration {
    /// Transform from `from` to `to`, inverting a stored one if needed.
    pub fn transform(&self, from: &str, to: &str) -> Option<RigidTransform> {
        self.transforms
            .iter()
            .find(|t| t.source_frame == from && t.target_frame == to)
            .cloned()
            .or_else(|| {
                self.transforms
                    .iter()
                    .find(|t| t.source_frame == to && t.target_frame == from)
                    .map(RigidTransform::inverse)
            })
    }
}

pub fn parse_calibration(text: &str) -> Result<Calibration, FormatError> {
    let raw: RawCalibration = serde_json::from_str(text)?;
    let k = raw
        .k
        .ok_or_else(|| FormatError::Schema("missing intrinsic matrix \"K\"".into()))?;
    let [w, h] = raw
        .image_size
        .ok_or_else(|| FormatError::Schema("missing \"image_size\"".into()))?;
    let intrinsics =
        Intrinsics::from_matrix(&k, w, h).map_err(|e| FormatError::validation(None, e))?;
    let mut transforms = Vec::with_capacity(raw.transforms.len());
    for (i, t) in raw.transforms.into_iter().enumerate() {
        let rotation = RotationMatrix::from_row_slice(&t.rotation, CALIBRATION_ROTATION_TOL)
            .map_err(|e| {
                FormatError::Calibration(format!(
                    "transform {i} ({} → {}): {e}",
                    t.source, t.target
                ))
            })?;
        if t.t.len() != 3 {
            return Err(FormatError::Schema(format!(
                "transform {i}: t needs 3 entries, got {}",
                t.t.len()
            )));
        }
        let rt = RigidTransform::new(
            rotation,
            Vector3::new(t.t[0], t.t[1], t.t[2]),
            t.source,
            t.target,
        )
        .map_err(|e: CameraError| FormatError::Calibration(format!("transform {i}: {e}")))?;
        transforms.push(rt);
    }
    Ok(Calibration {
        intrinsics,
        transforms,
    })
}

pub fn write_calibration(c: &Calibration) -> String {
    let raw = RawCalibration {
        k: Some(c.intrinsics.to_row_vec()),
        image_size: Some([c.intrinsics.image_width, c.intrinsics.image_height]),
        transforms: c
            .transforms
            .iter()
            .map(|t| RawTransform {
                source: t.source_frame.clone(),
                target: t.target_frame.clone(),
                rotation: t.rotation.to_row_vec(),
                t: t.translation.iter().copied().collect(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&raw).unwrap_or_default();
    s.push('\n');
    s
}
