//! Oriented 3D boxes, rotation algebra, and exact box intersection.
//!
//! All quantities are in meters and radians. Boxes live in camera axes
//! (x right, y down, z forward) unless stated otherwise; the math itself
//! is frame-agnostic.

mod boxes;
mod polytope;
mod rotation;

use thiserror::Error;

pub use boxes::{box_corners, Box3D, Dimensions};
pub use polytope::{intersection_volume, iou3d, ConvexPolytope, PLANE_EPS};
pub use rotation::{
    normalize_angle, rotation_from_euler, try_rotation_from_euler, EulerOrientation,
    RotationMatrix, ORTHONORMAL_TOL,
};

pub(crate) use rotation::rot_z;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid angle {name}: {value}")]
    InvalidAngle { name: &'static str, value: f64 },
    #[error("invalid dimension {name}: {value} (must be finite and > 0)")]
    InvalidDimension { name: &'static str, value: f64 },
    #[error("box center must be finite")]
    NonFiniteCenter,
    #[error("matrix is not a proper rotation: {reason}")]
    NotARotation { reason: String },
}
