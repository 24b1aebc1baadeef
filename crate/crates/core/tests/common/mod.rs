//! Oracles shared by the integration and acceptance tests. They avoid the
//! library's own geometry and matching code paths.
#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::{Point3, Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roadside3d::camera::Rect2D;
use roadside3d::datasets::DifficultyLevel;
use roadside3d::formats::{
    AnnotationRecord, DatasetManifest, DetectionRecord, FrameRecord, Occlusion,
};
use roadside3d::geometry::{iou3d, Box3D};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// R_Y(yaw) · R_X(pitch) · R_Z(roll) built from axis-angle factors.
pub fn oracle_rotation(b: &Box3D) -> Rotation3<f64> {
    let o = b.orientation;
    Rotation3::from_axis_angle(&Vector3::y_axis(), o.yaw)
        * Rotation3::from_axis_angle(&Vector3::x_axis(), o.pitch)
        * Rotation3::from_axis_angle(&Vector3::z_axis(), o.roll)
}

struct Frame {
    r: Rotation3<f64>,
    rinv: Rotation3<f64>,
    c: Point3<f64>,
    half: Vector3<f64>,
}

impl Frame {
    fn of(b: &Box3D) -> Self {
        let r = oracle_rotation(b);
        Self {
            r,
            rinv: r.inverse(),
            c: b.center,
            half: Vector3::new(b.dims.w, b.dims.h, b.dims.l) / 2.0,
        }
    }

    fn contains(&self, p: &Point3<f64>) -> bool {
        let q = self.rinv * (p - self.c);
        q.x.abs() <= self.half.x && q.y.abs() <= self.half.y && q.z.abs() <= self.half.z
    }
}

/// Monte-Carlo IoU with about `samples` points, stratified on a grid in the
/// local frame of the smaller box with one jittered point per cell.
pub fn mc_iou(a: &Box3D, b: &Box3D, samples: usize, rng: &mut impl Rng) -> f64 {
    let (va, vb) = (
        a.dims.h * a.dims.w * a.dims.l,
        b.dims.h * b.dims.w * b.dims.l,
    );
    let (small, other, vs) = if va <= vb { (a, b, va) } else { (b, a, vb) };
    let fs = Frame::of(small);
    let fo = Frame::of(other);
    let n = (samples as f64).cbrt().round() as usize;
    let mut inside = 0usize;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let u = |idx: usize, r: f64| (idx as f64 + r) / n as f64 * 2.0 - 1.0;
                let local = Vector3::new(
                    u(i, rng.random::<f64>()) * fs.half.x,
                    u(j, rng.random::<f64>()) * fs.half.y,
                    u(k, rng.random::<f64>()) * fs.half.z,
                );
                let p = fs.c + fs.r * local;
                if fo.contains(&p) {
                    inside += 1;
                }
            }
        }
    }
    let inter = vs * inside as f64 / (n * n * n) as f64;
    inter / (va + vb - inter)
}

/// Plain uniform Monte-Carlo intersection volume inside the joint bounding
/// box of the two circumspheres.
pub fn mc_intersection_uniform(a: &Box3D, b: &Box3D, samples: usize, rng: &mut impl Rng) -> f64 {
    let (fa, fb) = (Frame::of(a), Frame::of(b));
    let ra = fa.half.norm();
    let rb = fb.half.norm();
    let lo = Vector3::new(
        (a.center.x - ra).min(b.center.x - rb),
        (a.center.y - ra).min(b.center.y - rb),
        (a.center.z - ra).min(b.center.z - rb),
    );
    let hi = Vector3::new(
        (a.center.x + ra).max(b.center.x + rb),
        (a.center.y + ra).max(b.center.y + rb),
        (a.center.z + ra).max(b.center.z + rb),
    );
    let ext = hi - lo;
    let mut hits = 0usize;
    for _ in 0..samples {
        let p = Point3::from(
            lo + ext.component_mul(&Vector3::new(rng.random(), rng.random(), rng.random())),
        );
        if fa.contains(&p) && fb.contains(&p) {
            hits += 1;
        }
    }
    ext.x * ext.y * ext.z * hits as f64 / samples as f64
}

pub fn random_box(rng: &mut impl Rng, center_span: f64) -> Box3D {
    let c = [
        rng.random_range(-center_span..=center_span),
        rng.random_range(-center_span..=center_span),
        rng.random_range(-center_span..=center_span),
    ];
    let d = [
        rng.random_range(0.5..5.0),
        rng.random_range(0.5..5.0),
        rng.random_range(0.5..5.0),
    ];
    let pi = std::f64::consts::PI;
    let a = [
        rng.random_range(-pi..pi),
        rng.random_range(-1.5..1.5),
        rng.random_range(-pi..pi),
    ];
    Box3D::from_parts(c, d, a).unwrap()
}

/// A random 9-DOF pair, usually overlapping.
pub fn random_pair(rng: &mut impl Rng) -> (Box3D, Box3D) {
    let a = random_box(rng, 20.0);
    let mut b = random_box(rng, 0.0);
    let off = Vector3::new(
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0..2.0),
    );
    b.center = a.center + off;
    (a, b)
}

/// A random rigid motion as (rotation, translation).
pub fn random_rigid(rng: &mut impl Rng) -> (Rotation3<f64>, Vector3<f64>) {
    let axis = Vector3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    let axis = nalgebra::Unit::new_normalize(axis + Vector3::new(1e-3, 0.0, 0.0));
    let r = Rotation3::from_axis_angle(&axis, rng.random_range(-3.1..3.1));
    let t = Vector3::new(
        rng.random_range(-50.0..50.0),
        rng.random_range(-50.0..50.0),
        rng.random_range(-50.0..50.0),
    );
    (r, t)
}

// ---------------------------------------------------------------------------
// brute-force AP

fn level_rank(l: DifficultyLevel) -> u8 {
    match l {
        DifficultyLevel::Easy => 0,
        DifficultyLevel::Moderate => 1,
        DifficultyLevel::Hard => 2,
        DifficultyLevel::Ignored => 3,
    }
}

/// Difficulty by direct threshold tests.
pub fn oracle_level(a: &AnnotationRecord) -> DifficultyLevel {
    let h = a.box2d.map_or(0.0, |r| r.y2 - r.y1);
    let occ = a.occlusion.code();
    if occ == 0 && a.truncation <= 0.15 && h >= 40.0 {
        DifficultyLevel::Easy
    } else if occ <= 1 && a.truncation <= 0.30 && h >= 25.0 {
        DifficultyLevel::Moderate
    } else if occ <= 2 && a.truncation <= 0.50 && h >= 25.0 {
        DifficultyLevel::Hard
    } else {
        DifficultyLevel::Ignored
    }
}

/// AP for one class and level by exhaustive enumeration: match every frame,
/// rank all detections, then for each recall sample scan every prefix.
pub fn brute_force_ap(
    manifest: &DatasetManifest,
    dets: &BTreeMap<String, Vec<DetectionRecord>>,
    class: &str,
    level: DifficultyLevel,
    thr: f64,
    samples: &[f64],
) -> Option<f64> {
    let mut frames: Vec<&FrameRecord> = manifest.frames.iter().collect();
    frames.sort_by(|a, b| a.frame_id.cmp(&b.frame_id));
    let empty = Vec::new();
    // (score, frame rank, position) -> tp
    let mut ranked: Vec<(f64, usize, usize, bool)> = Vec::new();
    let mut n_gt = 0usize;
    for (fi, f) in frames.iter().enumerate() {
        let d = dets.get(&f.frame_id).unwrap_or(&empty);
        let counted: Vec<bool> = f
            .annotations
            .iter()
            .map(|a| {
                let l = oracle_level(a);
                l != DifficultyLevel::Ignored && level_rank(l) <= level_rank(level)
            })
            .collect();
        let mine: Vec<usize> = (0..f.annotations.len())
            .filter(|&i| f.annotations[i].class_name == class)
            .collect();
        n_gt += mine.iter().filter(|&&i| counted[i]).count();
        let mut order: Vec<usize> = (0..d.len())
            .filter(|&j| d[j].class_name() == class)
            .collect();
        // selection by repeated scan: highest score, lowest index first
        let mut sorted = Vec::new();
        while !order.is_empty() {
            let mut best = 0;
            for k in 1..order.len() {
                if d[order[k]].score > d[order[best]].score {
                    best = k;
                }
            }
            sorted.push(order.remove(best));
        }
        let mut used = vec![false; f.annotations.len()];
        let mut outcome: Vec<Option<bool>> = vec![None; sorted.len()];
        for (pos, &j) in sorted.iter().enumerate() {
            let mut pick: Option<(usize, f64)> = None;
            for &i in mine.iter().filter(|&&i| counted[i] && !used[i]) {
                let v = iou3d(&f.annotations[i].box3d, d[j].box3d());
                if v >= thr && pick.is_none_or(|(_, pv)| v > pv) {
                    pick = Some((i, v));
                }
            }
            if let Some((i, _)) = pick {
                used[i] = true;
                outcome[pos] = Some(true);
            }
        }
        for (pos, &j) in sorted.iter().enumerate() {
            if outcome[pos].is_some() {
                continue;
            }
            let mut pick: Option<(usize, f64)> = None;
            for &i in mine.iter().filter(|&&i| !counted[i] && !used[i]) {
                let v = iou3d(&f.annotations[i].box3d, d[j].box3d());
                if v >= thr && pick.is_none_or(|(_, pv)| v > pv) {
                    pick = Some((i, v));
                }
            }
            match pick {
                // overlaps uncounted ground truth: dropped from the ranking
                Some((i, _)) => used[i] = true,
                None => outcome[pos] = Some(false),
            }
        }
        for (pos, &j) in sorted.iter().enumerate() {
            if let Some(tp) = outcome[pos] {
                ranked.push((d[j].score, fi, pos, tp));
            }
        }
    }
    if n_gt == 0 {
        return None;
    }
    ranked.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut sum = 0.0;
    for &r in samples {
        let mut best = 0.0f64;
        for cut in 1..=ranked.len() {
            let tp = ranked[..cut].iter().filter(|x| x.3).count();
            let recall = tp as f64 / n_gt as f64;
            if recall >= r {
                best = best.max(tp as f64 / cut as f64);
            }
        }
        sum += best;
    }
    Some(100.0 * sum / samples.len() as f64)
}

pub fn r40() -> Vec<f64> {
    (1..=40).map(|k| k as f64 / 40.0).collect()
}

/// A small random evaluation instance: up to `max_frames` frames with up to
/// `max_boxes` ground-truth boxes each, plus detections mixing perturbed
/// copies, duplicates and clutter with coarse (often tied) scores.
pub fn random_instance(
    seed: u64,
    max_frames: usize,
    max_boxes: usize,
) -> (DatasetManifest, BTreeMap<String, Vec<DetectionRecord>>) {
    let mut rng = rng(seed);
    let classes = ["Car", "Pedestrian"];
    let mut m = DatasetManifest::new("oracle", classes.iter().map(|s| s.to_string()).collect());
    let mut dets = BTreeMap::new();
    let n_frames = rng.random_range(1..=max_frames);
    for fi in 0..n_frames {
        let id = format!("f{:02}", rng.random_range(0..100) * 10 + fi);
        let mut f = FrameRecord::new(id.clone(), [1920, 1080]);
        let n = rng.random_range(0..=max_boxes);
        for _ in 0..n {
            let class = classes[rng.random_range(0..2)];
            let c = [
                rng.random_range(-15.0..15.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(5.0..40.0),
            ];
            let d = [
                rng.random_range(1.0..2.5),
                rng.random_range(0.8..2.5),
                rng.random_range(1.0..5.0),
            ];
            let b = Box3D::from_parts(c, d, [rng.random_range(-3.0..3.0), 0.0, 0.0]).unwrap();
            let mut a = AnnotationRecord::new(class, b, id.as_str());
            a.occlusion = Occlusion::try_from(rng.random_range(0..4)).unwrap();
            a.truncation = [0.0, 0.1, 0.2, 0.4, 0.7][rng.random_range(0..5)];
            let h = [10.0, 30.0, 45.0, 100.0][rng.random_range(0..4)];
            a.box2d = Some(Rect2D {
                x1: 100.0,
                y1: 200.0,
                x2: 150.0,
                y2: 200.0 + h,
            });
            f.annotations.push(a);
        }
        let mut fd = Vec::new();
        for a in &f.annotations {
            let copies = rng.random_range(0..3);
            for _ in 0..copies {
                let mut b = a.box3d;
                b.center.x += rng.random_range(-0.8..0.8);
                b.center.z += rng.random_range(-0.8..0.8);
                let mut r = a.clone();
                r.box3d = b;
                if rng.random_bool(0.1) {
                    r.class_name = classes[rng.random_range(0..2)].to_string();
                }
                fd.push(DetectionRecord::new(
                    r,
                    rng.random_range(0..10) as f64 / 10.0,
                ));
            }
        }
        for _ in 0..rng.random_range(0..4) {
            let c = [
                rng.random_range(-15.0..15.0),
                0.0,
                rng.random_range(5.0..40.0),
            ];
            let b = Box3D::from_parts(c, [1.5, 1.8, 4.0], [0.0, 0.0, 0.0]).unwrap();
            let r = AnnotationRecord::new(classes[rng.random_range(0..2)], b, id.as_str());
            fd.push(DetectionRecord::new(
                r,
                rng.random_range(0..10) as f64 / 10.0,
            ));
        }
        fd.truncate(max_boxes.max(1) * 2);
        // shuffle input order
        for i in (1..fd.len()).rev() {
            let j = rng.random_range(0..=i);
            fd.swap(i, j);
        }
        if m.frame(&id).is_none() {
            dets.insert(id.clone(), fd);
            m.frames.push(f);
        }
    }
    (m, dets)
}
