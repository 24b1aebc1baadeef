use serde::{Deserialize, Serialize};

use crate::formats::{AnnotationRecord, DetectionRecord};

use super::EvalError;

/// Mean errors over matched ground-truth/detection pairs, one per
/// prediction component: class, position, dimensions, orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBreakdown {
    pub pairs: usize,
    /// Fraction of pairs whose class labels differ.
    pub cls_error: f64,
    /// Mean center distance (m).
    pub pos_error: f64,
    /// Mean of `(|Δh| + |Δw| + |Δl|) / 3` (m).
    pub dim_error: f64,
    /// Mean geodesic angle of `R_gtᵀ·R_det` (rad).
    pub ori_error: f64,
}

pub fn error_breakdown(
    pairs: &[(&AnnotationRecord, &DetectionRecord)],
) -> Result<ErrorBreakdown, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyInput(
            "no matched pairs for the error breakdown".into(),
        ));
    }
    let n = pairs.len() as f64;
    let (mut cls, mut pos, mut dim, mut ori) = (0.0, 0.0, 0.0, 0.0);
    for (gt, det) in pairs {
        let (g, d) = (&gt.box3d, det.box3d());
        if gt.class_name != det.class_name() {
            cls += 1.0;
        }
        pos += (g.center - d.center).norm();
        dim += ((g.dims.h - d.dims.h).abs()
            + (g.dims.w - d.dims.w).abs()
            + (g.dims.l - d.dims.l).abs())
            / 3.0;
        ori += g.rotation().angle_to(&d.rotation());
    }
    Ok(ErrorBreakdown {
        pairs: pairs.len(),
        cls_error: cls / n,
        pos_error: pos / n,
        dim_error: dim / n,
        ori_error: ori / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Box3D;
    use std::f64::consts::FRAC_PI_2;

    fn rec(center: [f64; 3], yaw: f64) -> AnnotationRecord {
        AnnotationRecord::new(
            "Car",
            Box3D::from_parts(center, [1.5, 1.8, 4.2], [yaw, 0.0, 0.0]).unwrap(),
            "f",
        )
    }

    #[test]
    fn identical_pairs_have_no_error() {
        let g = rec([1.0, 2.0, 30.0], 0.3);
        let d = DetectionRecord::new(g.clone(), 0.9);
        let e = error_breakdown(&[(&g, &d), (&g, &d)]).unwrap();
        assert_eq!((e.cls_error, e.pos_error, e.dim_error), (0.0, 0.0, 0.0));
        assert!(e.ori_error < 1e-7);
    }

    #[test]
    fn one_meter_along_z() {
        let g = rec([0.0, 0.0, 30.0], 0.0);
        let d = DetectionRecord::new(rec([0.0, 0.0, 31.0], 0.0), 0.9);
        assert_eq!(error_breakdown(&[(&g, &d)]).unwrap().pos_error, 1.0);
    }

    #[test]
    fn quarter_turn_yaw() {
        let g = rec([0.0, 0.0, 30.0], 0.0);
        let d = DetectionRecord::new(rec([0.0, 0.0, 30.0], FRAC_PI_2), 0.9);
        let e = error_breakdown(&[(&g, &d)]).unwrap();
        // arccos((tr R_rel − 1) / 2) with tr = 1 + 2 cos(π/2)
        assert!((e.ori_error - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn class_and_dims() {
        let g = rec([0.0, 0.0, 30.0], 0.0);
        let mut d = DetectionRecord::new(rec([0.0, 0.0, 30.0], 0.0), 0.9);
        d.annotation.class_name = "Van".into();
        d.annotation.box3d.dims.l = 5.1;
        let e = error_breakdown(&[(&g, &d)]).unwrap();
        assert_eq!(e.cls_error, 1.0);
        assert!((e.dim_error - 0.3).abs() < 1e-12);
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(
            error_breakdown(&[]),
            Err(EvalError::EmptyInput(_))
        ));
    }
}
