//! Euler angles and rotation matrices in camera axes.
//!
//! Axes: x right, y down, z forward. The single normative composition is
//! intrinsic Y(yaw) → X(pitch) → Z(roll):
//!
//! ```text
//! R = R_Y(yaw) · R_X(pitch) · R_Z(roll)
//! ```

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::GeometryError;

/// Tolerance on `RᵀR = I` and `det R = 1` for matrices built in-process.
pub const ORTHONORMAL_TOL: f64 = 1e-9;

/// `cos(pitch)` below this value is treated as gimbal lock.
const GIMBAL_EPS: f64 = 1e-6;

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let mut r = angle.rem_euclid(TAU);
    if r >= TAU {
        r = 0.0;
    }
    if r > PI {
        r -= TAU;
    }
    r
}

/// Yaw, pitch and roll in radians, normalized to `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerOrientation {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl EulerOrientation {
    pub fn new(yaw: f64, pitch: f64, roll: f64) -> Result<Self, GeometryError> {
        for (name, v) in [("yaw", yaw), ("pitch", pitch), ("roll", roll)] {
            if !v.is_finite() {
                return Err(GeometryError::InvalidAngle { name, value: v });
            }
        }
        Ok(Self {
            yaw: normalize_angle(yaw),
            pitch: normalize_angle(pitch),
            roll: normalize_angle(roll),
        })
    }

    pub const fn identity() -> Self {
        Self {
            yaw: 0.0,
            pitch: 0.0,
            roll: 0.0,
        }
    }

    pub fn yaw_only(yaw: f64) -> Result<Self, GeometryError> {
        Self::new(yaw, 0.0, 0.0)
    }

    pub fn to_rotation(&self) -> RotationMatrix {
        rotation_from_euler(self)
    }
}

impl Default for EulerOrientation {
    fn default() -> Self {
        Self::identity()
    }
}

pub(crate) fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub(crate) fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub(crate) fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// A proper rotation (orthonormal, determinant +1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Validates `m` against `tol` on both orthonormality and determinant.
    pub fn from_matrix(m: Matrix3<f64>, tol: f64) -> Result<Self, GeometryError> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NotARotation {
                reason: "non-finite entry".into(),
            });
        }
        let ortho = (m.transpose() * m - Matrix3::identity()).abs().max();
        if ortho > tol {
            return Err(GeometryError::NotARotation {
                reason: format!("|RᵀR − I| = {ortho:.3e} exceeds {tol:.1e}"),
            });
        }
        let det = m.determinant();
        if (det - 1.0).abs() > tol {
            return Err(GeometryError::NotARotation {
                reason: format!("det = {det:.9}"),
            });
        }
        Ok(Self(m))
    }

    /// Wraps a matrix known to be a rotation (products of rotations etc).
    pub(crate) fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Self(m)
    }

    /// Row-major 3×3 entries.
    pub fn from_row_slice(v: &[f64], tol: f64) -> Result<Self, GeometryError> {
        if v.len() != 9 {
            return Err(GeometryError::NotARotation {
                reason: format!("expected 9 entries, got {}", v.len()),
            });
        }
        Self::from_matrix(Matrix3::from_row_slice(v), tol)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn to_row_vec(&self) -> Vec<f64> {
        let m = &self.0;
        (0..3)
            .flat_map(|r| (0..3).map(move |c| m[(r, c)]))
            .collect()
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn compose(&self, rhs: &RotationMatrix) -> Self {
        Self(self.0 * rhs.0)
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    /// Geodesic angle between two rotations, in `[0, π]`.
    pub fn angle_to(&self, other: &RotationMatrix) -> f64 {
        let rel = self.0.transpose() * other.0;
        ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
    }

    /// Decomposes into yaw/pitch/roll under the Y→X→Z convention.
    ///
    /// At gimbal lock (`|pitch|` within ~1e-6 of π/2) roll is set to zero and
    /// the residual rotation is folded into yaw.
    pub fn to_euler(&self) -> EulerOrientation {
        let m = &self.0;
        let sp = (-m[(1, 2)]).clamp(-1.0, 1.0);
        let cp = m[(1, 0)].hypot(m[(1, 1)]);
        let pitch = sp.atan2(cp);
        let (yaw, roll) = if cp < GIMBAL_EPS {
            let s = sp.signum();
            ((s * m[(0, 1)]).atan2(m[(0, 0)]), 0.0)
        } else {
            (m[(0, 2)].atan2(m[(2, 2)]), m[(1, 0)].atan2(m[(1, 1)]))
        };
        EulerOrientation {
            yaw: normalize_angle(yaw),
            pitch: normalize_angle(pitch),
            roll: normalize_angle(roll),
        }
    }
}

/// `R = R_Y(yaw) · R_X(pitch) · R_Z(roll)`.
pub fn rotation_from_euler(o: &EulerOrientation) -> RotationMatrix {
    RotationMatrix(rot_y(o.yaw) * rot_x(o.pitch) * rot_z(o.roll))
}

/// Like [`rotation_from_euler`] but validates raw angles first.
pub fn try_rotation_from_euler(
    yaw: f64,
    pitch: f64,
    roll: f64,
) -> Result<RotationMatrix, GeometryError> {
    EulerOrientation::new(yaw, pitch, roll).map(|o| rotation_from_euler(&o))
}
