//! Geometry, calibration, label formats and evaluation for monocular 3D
//! object detection from roadside cameras.
//!
//! Boxes carry a full orientation (yaw, pitch, roll) in camera axes
//! (x right, y down, z forward). [`geometry::iou3d`] computes the exact
//! overlap of two oriented boxes by convex clipping. [`eval::evaluate`]
//! turns a ground-truth manifest plus per-frame detections into KITTI-style
//! AP tables at three difficulty levels. [`synth`] generates seeded
//! synthetic corpora with controlled detection noise, and [`cli::run`]
//! exposes everything as the `roadside3d` command.
//!
//! ```
//! use roadside3d::geometry::{iou3d, Box3D};
//!
//! let a = Box3D::cube([0.0, 0.0, 0.0], 2.0).unwrap();
//! let b = Box3D::cube([1.0, 0.0, 0.0], 2.0).unwrap();
//! assert!((iou3d(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
//! ```

pub mod camera;
pub mod cli;
pub mod datasets;
pub mod eval;
pub mod formats;
pub mod geometry;
pub mod synth;
