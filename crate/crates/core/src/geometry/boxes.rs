use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::rotation::{rotation_from_euler, EulerOrientation, RotationMatrix};
use super::GeometryError;

/// Box extents in meters.
///
/// Local axis binding: width along local x, height along local y, length
/// along local z (forward).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dimensions {
    pub h: f64,
    pub w: f64,
    pub l: f64,
}

impl Dimensions {
    pub fn new(h: f64, w: f64, l: f64) -> Result<Self, GeometryError> {
        for (name, v) in [("h", h), ("w", w), ("l", l)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(GeometryError::InvalidDimension { name, value: v });
            }
        }
        Ok(Self { h, w, l })
    }

    pub fn volume(&self) -> f64 {
        self.h * self.w * self.l
    }

    /// Half extents along local (x, y, z).
    pub fn half_extents(&self) -> Vector3<f64> {
        Vector3::new(self.w / 2.0, self.h / 2.0, self.l / 2.0)
    }
}

/// A 9-DOF oriented box: center, (h, w, l) and yaw/pitch/roll.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3D {
    pub center: Point3<f64>,
    pub dims: Dimensions,
    pub orientation: EulerOrientation,
}

impl Box3D {
    pub fn new(
        center: Point3<f64>,
        dims: Dimensions,
        orientation: EulerOrientation,
    ) -> Result<Self, GeometryError> {
        if center.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFiniteCenter);
        }
        let dims = Dimensions::new(dims.h, dims.w, dims.l)?;
        let orientation =
            EulerOrientation::new(orientation.yaw, orientation.pitch, orientation.roll)?;
        Ok(Self {
            center,
            dims,
            orientation,
        })
    }

    /// Convenience constructor from raw numbers.
    pub fn from_parts(
        center: [f64; 3],
        hwl: [f64; 3],
        ypr: [f64; 3],
    ) -> Result<Self, GeometryError> {
        Self::new(
            Point3::from(center),
            Dimensions::new(hwl[0], hwl[1], hwl[2])?,
            EulerOrientation::new(ypr[0], ypr[1], ypr[2])?,
        )
    }

    /// Axis-aligned cube of side `side` at `center`.
    pub fn cube(center: [f64; 3], side: f64) -> Result<Self, GeometryError> {
        Self::from_parts(center, [side; 3], [0.0; 3])
    }

    pub fn volume(&self) -> f64 {
        self.dims.volume()
    }

    pub fn rotation(&self) -> RotationMatrix {
        rotation_from_euler(&self.orientation)
    }

    /// Applies `p ↦ R·p + t` to the box. Dimensions are unchanged.
    pub fn transformed(&self, rotation: &RotationMatrix, translation: &Vector3<f64>) -> Box3D {
        let center = Point3::from(rotation.apply(&self.center.coords) + translation);
        let orientation = rotation.compose(&self.rotation()).to_euler();
        Box3D {
            center,
            dims: self.dims,
            orientation,
        }
    }

    /// Multiplies every linear quantity by `s > 0`.
    pub fn scaled(&self, s: f64) -> Box3D {
        Box3D {
            center: Point3::from(self.center.coords * s),
            dims: Dimensions {
                h: self.dims.h * s,
                w: self.dims.w * s,
                l: self.dims.l * s,
            },
            orientation: self.orientation,
        }
    }

    /// Radius of the bounding sphere.
    pub fn circumradius(&self) -> f64 {
        self.dims.half_extents().norm()
    }

    /// The eight corners.
    ///
    /// Corner `k` has local offset `(sx·w/2, sy·h/2, sz·l/2)` where `sx` is
    /// `+1` when bit 0 of `k` is set (else `-1`), `sy` follows bit 1 and `sz`
    /// follows bit 2. Corner 0 is therefore `(-,-,-)` and corner 7 is `(+,+,+)`.
    pub fn corners(&self) -> [Point3<f64>; 8] {
        let r = self.rotation();
        let half = self.dims.half_extents();
        std::array::from_fn(|k| {
            let sign = |bit: usize| if k & (1 << bit) != 0 { 1.0 } else { -1.0 };
            let local = Vector3::new(sign(0) * half.x, sign(1) * half.y, sign(2) * half.z);
            self.center + r.apply(&local)
        })
    }

    /// Whether `p` lies inside the closed box.
    pub fn contains(&self, p: &Point3<f64>) -> bool {
        let local = self.rotation().transpose().apply(&(p - self.center));
        let half = self.dims.half_extents();
        local.x.abs() <= half.x && local.y.abs() <= half.y && local.z.abs() <= half.z
    }

    /// The six face planes as `(outward unit normal, offset)` with the box
    /// interior being `n·p ≤ offset`.
    pub fn face_planes(&self) -> [(Vector3<f64>, f64); 6] {
        let m = *self.rotation().matrix();
        let half = self.dims.half_extents();
        std::array::from_fn(|i| {
            let axis = i / 2;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let n: Vector3<f64> = m.column(axis) * sign;
            let offset = n.dot(&self.center.coords) + half[axis];
            (n, offset)
        })
    }
}

/// Corners of `b`; see [`Box3D::corners`] for the ordering.
pub fn box_corners(b: &Box3D) -> [Point3<f64>; 8] {
    b.corners()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn sorted(mut pts: Vec<[f64; 3]>) -> Vec<[f64; 3]> {
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts
    }

    #[test]
    fn unit_cube_corners() {
        let b = Box3D::cube([0.0; 3], 1.0).unwrap();
        let got = sorted(b.corners().iter().map(|p| [p.x, p.y, p.z]).collect());
        let mut want = Vec::new();
        for x in [-0.5, 0.5] {
            for y in [-0.5, 0.5] {
                for z in [-0.5, 0.5] {
                    want.push([x, y, z]);
                }
            }
        }
        assert_eq!(got, sorted(want));
        assert_eq!(b.corners()[0], Point3::new(-0.5, -0.5, -0.5));
        assert_eq!(b.corners()[7], Point3::new(0.5, 0.5, 0.5));
    }

    #[test]
    fn translated_cube_corners() {
        let a = Box3D::cube([0.0; 3], 1.0).unwrap();
        let b = Box3D::cube([10.0, 0.0, 5.0], 1.0).unwrap();
        for (p, q) in a.corners().iter().zip(b.corners().iter()) {
            assert_eq!(*q, p + Vector3::new(10.0, 0.0, 5.0));
        }
    }

    #[test]
    fn quarter_yaw_swaps_x_and_z_extents() {
        let extent = |b: &Box3D| {
            let c = b.corners();
            let span = |f: fn(&Point3<f64>) -> f64| {
                let v: Vec<f64> = c.iter().map(f).collect();
                v.iter().cloned().fold(f64::MIN, f64::max)
                    - v.iter().cloned().fold(f64::MAX, f64::min)
            };
            (span(|p| p.x), span(|p| p.z))
        };
        let straight = Box3D::from_parts([0.0; 3], [1.5, 2.0, 4.0], [0.0; 3]).unwrap();
        let turned = Box3D::from_parts([0.0; 3], [1.5, 2.0, 4.0], [PI / 2.0, 0.0, 0.0]).unwrap();
        let (sx, sz) = extent(&straight);
        assert_relative_eq!(sx, 2.0);
        assert_relative_eq!(sz, 4.0);
        let (tx, tz) = extent(&turned);
        assert_relative_eq!(tx, 4.0, epsilon = 1e-12);
        assert_relative_eq!(tz, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn invalid_dims_rejected() {
        assert!(Box3D::from_parts([0.0; 3], [0.0, 1.0, 1.0], [0.0; 3]).is_err());
        assert!(Box3D::from_parts([0.0; 3], [1.0, -1.0, 1.0], [0.0; 3]).is_err());
        assert!(Box3D::from_parts([f64::NAN, 0.0, 0.0], [1.0; 3], [0.0; 3]).is_err());
    }

    #[test]
    fn face_planes_bound_the_corners() {
        let b = Box3D::from_parts([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], [0.4, -0.3, 0.2]).unwrap();
        for (n, d) in b.face_planes() {
            let on_plane = b
                .corners()
                .iter()
                .filter(|c| (n.dot(&c.coords) - d).abs() < 1e-12)
                .count();
            assert_eq!(on_plane, 4);
            assert!(b.corners().iter().all(|c| n.dot(&c.coords) <= d + 1e-12));
        }
    }
}
