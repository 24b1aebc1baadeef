//! Pinhole projection and rigid frame changes.
//!
//! A point `P` in a source frame projects as `[x y w]ᵀ = K · [R | t] · [P 1]ᵀ`
//! with pixel coordinates `u = x / w`, `v = y / w`. For a standard pinhole
//! `K` the scale `w` is the camera-frame depth of the point.

use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{rot_z, Box3D, Dimensions, GeometryError, RotationMatrix};

/// Points at or closer than this depth (m) are considered behind the camera.
pub const MIN_DEPTH: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CameraError {
    #[error("point is behind the camera (depth {depth} m)")]
    BehindCamera { depth: f64 },
    #[error("frame mismatch: transform expects '{expected}', box is in '{found}'")]
    FrameMismatch { expected: String, found: String },
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("invalid frame labels: {0}")]
    InvalidFrames(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub skew: f64,
    pub image_width: u32,
    pub image_height: u32,
}

impl Intrinsics {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        skew: f64,
        image_width: u32,
        image_height: u32,
    ) -> Result<Self, CameraError> {
        let bad = |m: String| Err(CameraError::InvalidIntrinsics(m));
        if [fx, fy, cx, cy, skew].iter().any(|v| !v.is_finite()) {
            return bad("non-finite entry".into());
        }
        if fx <= 0.0 || fy <= 0.0 {
            return bad(format!("focal lengths must be positive (fx={fx}, fy={fy})"));
        }
        if !(0.0..f64::from(image_width)).contains(&cx) {
            return bad(format!("cx={cx} outside [0, {image_width})"));
        }
        if !(0.0..f64::from(image_height)).contains(&cy) {
            return bad(format!("cy={cy} outside [0, {image_height})"));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            skew,
            image_width,
            image_height,
        })
    }

    /// Intrinsics for a horizontal field of view with the principal point at
    /// the image center and square pixels.
    pub fn from_fov(
        image_width: u32,
        image_height: u32,
        horizontal_fov_deg: f64,
    ) -> Result<Self, CameraError> {
        let half = (horizontal_fov_deg.to_radians() / 2.0).tan();
        let f = f64::from(image_width) / 2.0 / half;
        Self::new(
            f,
            f,
            f64::from(image_width) / 2.0,
            f64::from(image_height) / 2.0,
            0.0,
            image_width,
            image_height,
        )
    }

    /// Row-major `[fx s cx; 0 fy cy; 0 0 1]`.
    pub fn from_matrix(
        k: &[f64],
        image_width: u32,
        image_height: u32,
    ) -> Result<Self, CameraError> {
        if k.len() != 9 {
            return Err(CameraError::InvalidIntrinsics(format!(
                "K needs 9 entries, got {}",
                k.len()
            )));
        }
        if k[3] != 0.0 || k[6] != 0.0 || k[7] != 0.0 || k[8] != 1.0 {
            return Err(CameraError::InvalidIntrinsics(
                "K bottom rows must be [0 fy cy; 0 0 1]".into(),
            ));
        }
        Self::new(k[0], k[4], k[2], k[5], k[1], image_width, image_height)
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.fx, self.skew, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0,
        )
    }

    pub fn to_row_vec(&self) -> Vec<f64> {
        vec![
            self.fx, self.skew, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0,
        ]
    }

    /// Intrinsics after resizing the image by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, CameraError> {
        Self::new(
            self.fx * factor,
            self.fy * factor,
            self.cx * factor,
            self.cy * factor,
            self.skew * factor,
            (f64::from(self.image_width) * factor).round() as u32,
            (f64::from(self.image_height) * factor).round() as u32,
        )
    }

    /// Projects a camera-frame point.
    pub fn project(&self, p: &Point3<f64>) -> Result<ImagePoint, CameraError> {
        if p.z.is_nan() || p.z <= MIN_DEPTH {
            return Err(CameraError::BehindCamera { depth: p.z });
        }
        let h = self.matrix() * p.coords;
        Ok(ImagePoint {
            u: h.x / h.z,
            v: h.y / h.z,
            w: h.z,
        })
    }

    /// Camera-frame point at depth `w` along the ray through `(u, v)`.
    pub fn unproject(&self, u: f64, v: f64, w: f64) -> Point3<f64> {
        let y = (v - self.cy) / self.fy;
        let x = (u - self.cx - self.skew * y) / self.fx;
        Point3::new(x * w, y * w, w)
    }

    pub fn image_rect(&self) -> Rect2D {
        Rect2D {
            x1: 0.0,
            y1: 0.0,
            x2: f64::from(self.image_width),
            y2: f64::from(self.image_height),
        }
    }
}

/// Homogeneous projection result: pixel `(u, v)` and scale `w` (depth).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImagePoint {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

/// Axis-aligned pixel rectangle `[x1, x2] × [y1, y2]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Rect2D {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl Rect2D {
    pub fn width(&self) -> f64 {
        (self.x2 - self.x1).max(0.0)
    }

    pub fn height(&self) -> f64 {
        (self.y2 - self.y1).max(0.0)
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn intersect(&self, other: &Rect2D) -> Option<Rect2D> {
        let r = Rect2D {
            x1: self.x1.max(other.x1),
            y1: self.y1.max(other.y1),
            x2: self.x2.min(other.x2),
            y2: self.y2.min(other.y2),
        };
        (r.x1 < r.x2 && r.y1 < r.y2).then_some(r)
    }
}

/// A rigid transform `p ↦ R·p + t` from `source_frame` to `target_frame`.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidTransform {
    pub rotation: RotationMatrix,
    pub translation: Vector3<f64>,
    pub source_frame: String,
    pub target_frame: String,
}

impl RigidTransform {
    pub fn new(
        rotation: RotationMatrix,
        translation: Vector3<f64>,
        source_frame: impl Into<String>,
        target_frame: impl Into<String>,
    ) -> Result<Self, CameraError> {
        let (source_frame, target_frame) = (source_frame.into(), target_frame.into());
        if source_frame.trim().is_empty() || target_frame.trim().is_empty() {
            return Err(CameraError::InvalidFrames(
                "frame labels must be nonempty".into(),
            ));
        }
        if source_frame == target_frame {
            return Err(CameraError::InvalidFrames(format!(
                "source and target are both '{source_frame}'"
            )));
        }
        if translation.iter().any(|v| !v.is_finite()) {
            return Err(CameraError::InvalidFrames("non-finite translation".into()));
        }
        Ok(Self {
            rotation,
            translation,
            source_frame,
            target_frame,
        })
    }

    pub fn identity(source_frame: &str, target_frame: &str) -> Result<Self, CameraError> {
        Self::new(
            RotationMatrix::identity(),
            Vector3::zeros(),
            source_frame,
            target_frame,
        )
    }

    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation.apply(&p.coords) + self.translation)
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            translation: -rt.apply(&self.translation),
            rotation: rt,
            source_frame: self.target_frame.clone(),
            target_frame: self.source_frame.clone(),
        }
    }

    /// `next ∘ self`: maps `self.source_frame` to `next.target_frame`.
    pub fn then(&self, next: &RigidTransform) -> Result<RigidTransform, CameraError> {
        if next.source_frame != self.target_frame {
            return Err(CameraError::FrameMismatch {
                expected: next.source_frame.clone(),
                found: self.target_frame.clone(),
            });
        }
        RigidTransform::new(
            next.rotation.compose(&self.rotation),
            next.rotation.apply(&self.translation) + next.translation,
            self.source_frame.clone(),
            next.target_frame.clone(),
        )
    }
}

/// Projects a source-frame point through `K · [R | t]`.
pub fn project_point(
    k: &Intrinsics,
    t: &RigidTransform,
    p: &Point3<f64>,
) -> Result<ImagePoint, CameraError> {
    k.project(&t.apply(p))
}

/// Inverse of [`project_point`] for a known scale `w`.
pub fn back_project(k: &Intrinsics, t: &RigidTransform, img: &ImagePoint) -> Point3<f64> {
    t.inverse().apply(&k.unproject(img.u, img.v, img.w))
}

/// Moves a box expressed in `box_frame` into `t.target_frame`.
///
/// The full rotation is composed (`R · R_box`) and re-decomposed under the
/// geometry Euler convention, so a yaw-only source box generally picks up
/// pitch and roll.
pub fn transform_box(t: &RigidTransform, box_frame: &str, b: &Box3D) -> Result<Box3D, CameraError> {
    if box_frame != t.source_frame {
        return Err(CameraError::FrameMismatch {
            expected: t.source_frame.clone(),
            found: box_frame.to_string(),
        });
    }
    Ok(b.transformed(&t.rotation, &t.translation))
}

/// Image-space footprint of a box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedBox {
    /// Footprint clipped to the image; `None` when not visible.
    pub rect: Option<Rect2D>,
    /// Footprint before clipping to the image bounds.
    pub unclipped: Option<Rect2D>,
    pub visible: bool,
}

impl ProjectedBox {
    pub fn height(&self) -> f64 {
        self.rect.map_or(0.0, |r| r.height())
    }

    /// Fraction of the unclipped footprint that falls outside the image.
    pub fn truncation(&self) -> f64 {
        match (self.rect, self.unclipped) {
            (Some(r), Some(u)) if u.area() > 0.0 => (1.0 - r.area() / u.area()).clamp(0.0, 1.0),
            _ => 1.0,
        }
    }
}

const BOX_EDGES: [(usize, usize); 12] = [
    (0, 1),
    (2, 3),
    (4, 5),
    (6, 7),
    (0, 2),
    (1, 3),
    (4, 6),
    (5, 7),
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

/// Projects the box outline and returns its axis-aligned footprint.
///
/// Corners in front of the camera are projected directly; edges crossing the
/// near plane contribute their crossing point, so a box partially behind the
/// camera extends to the image border instead of shrinking.
pub fn project_box(k: &Intrinsics, t: &RigidTransform, b: &Box3D) -> ProjectedBox {
    let cam: Vec<Point3<f64>> = b.corners().iter().map(|c| t.apply(c)).collect();
    let near = MIN_DEPTH * 2.0;
    let mut pts: Vec<Point3<f64>> = cam.iter().filter(|p| p.z > near).copied().collect();
    for (i, j) in BOX_EDGES {
        let (p, q) = (cam[i], cam[j]);
        if (p.z > near) != (q.z > near) {
            let s = (near - p.z) / (q.z - p.z);
            let mut x = p + (q - p) * s;
            x.z = near;
            pts.push(x);
        }
    }
    let invisible = ProjectedBox {
        rect: None,
        unclipped: None,
        visible: false,
    };
    if pts.is_empty() {
        return invisible;
    }
    let mut r = Rect2D {
        x1: f64::INFINITY,
        y1: f64::INFINITY,
        x2: f64::NEG_INFINITY,
        y2: f64::NEG_INFINITY,
    };
    for p in &pts {
        let h = k.matrix() * p.coords;
        let (u, v) = (h.x / h.z, h.y / h.z);
        r.x1 = r.x1.min(u);
        r.y1 = r.y1.min(v);
        r.x2 = r.x2.max(u);
        r.y2 = r.y2.max(v);
    }
    match r.intersect(&k.image_rect()) {
        Some(clipped) => ProjectedBox {
            rect: Some(clipped),
            unclipped: Some(r),
            visible: true,
        },
        None => ProjectedBox {
            unclipped: Some(r),
            ..invisible
        },
    }
}

/// Box-local axes expressed in a z-up sensor frame (x forward, y left):
/// length → +x, height (local +y, "down") → −z, width → −y.
fn lidar_axes() -> Matrix3<f64> {
    Matrix3::new(0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, -1.0, 0.0)
}

/// A 7-DOF box as annotated in a z-up LiDAR frame: center, dims and heading
/// about the vertical axis (heading 0 points the length along +x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LidarBox {
    pub center: [f64; 3],
    pub dims: Dimensions,
    pub heading: f64,
}

impl LidarBox {
    pub fn new(center: [f64; 3], dims: Dimensions, heading: f64) -> Result<Self, CameraError> {
        Box3D::from_parts(center, [dims.h, dims.w, dims.l], [heading, 0.0, 0.0])?;
        Ok(Self {
            center,
            dims,
            heading,
        })
    }

    /// The same box as a [`Box3D`] in the LiDAR frame.
    pub fn to_box3d(&self) -> Box3D {
        let r = RotationMatrix::from_matrix_unchecked(rot_z(self.heading) * lidar_axes());
        Box3D {
            center: Point3::from(self.center),
            dims: self.dims,
            orientation: r.to_euler(),
        }
    }

    /// Recovers the heading of a [`Box3D`] whose orientation keeps the height
    /// axis vertical in a z-up frame.
    pub fn from_box3d(b: &Box3D) -> Self {
        let m = b.rotation().matrix() * lidar_axes().transpose();
        Self {
            center: [b.center.x, b.center.y, b.center.z],
            dims: b.dims,
            heading: m[(1, 0)].atan2(m[(0, 0)]),
        }
    }
}

/// Imports a LiDAR-frame 7-DOF annotation into the target (camera) frame.
pub fn import_lidar_box(
    t: &RigidTransform,
    lidar_frame: &str,
    b: &LidarBox,
) -> Result<Box3D, CameraError> {
    transform_box(t, lidar_frame, &b.to_box3d())
}

/// The conventional LiDAR (x forward, y left, z up) to camera
/// (x right, y down, z forward) axis permutation.
pub fn lidar_to_camera_axes() -> RotationMatrix {
    RotationMatrix::from_matrix_unchecked(Matrix3::new(
        0.0, -1.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0,
    ))
}
