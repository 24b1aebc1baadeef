//! Convex polytopes, half-space clipping, and exact box intersection.

use std::cmp::Ordering;

use nalgebra::{Point3, Vector3};

use super::boxes::Box3D;

/// Vertices closer than this to a clipping plane count as lying on it.
pub const PLANE_EPS: f64 = 1e-9;

/// Outward-wound faces of a box, in the corner ordering of [`Box3D::corners`].
const BOX_FACES: [[usize; 4]; 6] = [
    [1, 3, 7, 5],
    [0, 4, 6, 2],
    [2, 6, 7, 3],
    [0, 1, 5, 4],
    [4, 5, 7, 6],
    [0, 2, 3, 1],
];

/// A closed convex polytope with counter-clockwise (outward) face cycles.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvexPolytope {
    vertices: Vec<Point3<f64>>,
    faces: Vec<Vec<usize>>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Inside,
    On,
    Outside,
}

impl ConvexPolytope {
    pub fn from_box(b: &Box3D) -> Self {
        Self {
            vertices: b.corners().to_vec(),
            faces: BOX_FACES.iter().map(|f| f.to_vec()).collect(),
        }
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[Vec<usize>] {
        &self.faces
    }

    pub fn is_empty(&self) -> bool {
        self.faces.len() < 4
    }

    fn from_face_points(faces: Vec<Vec<Point3<f64>>>) -> Self {
        let mut vertices: Vec<Point3<f64>> = Vec::new();
        let mut index_faces = Vec::with_capacity(faces.len());
        for face in faces {
            let mut idx: Vec<usize> = Vec::with_capacity(face.len());
            for p in face {
                let i = match vertices.iter().position(|q| (q - p).norm() <= PLANE_EPS) {
                    Some(i) => i,
                    None => {
                        vertices.push(p);
                        vertices.len() - 1
                    }
                };
                if idx.last() != Some(&i) {
                    idx.push(i);
                }
            }
            while idx.len() > 1 && idx.first() == idx.last() {
                idx.pop();
            }
            if idx.len() >= 3 {
                index_faces.push(idx);
            }
        }
        Self {
            vertices,
            faces: index_faces,
        }
    }

    /// Keeps the part of the polytope with `normal·p ≤ offset`.
    pub fn clip(&self, normal: &Vector3<f64>, offset: f64) -> ConvexPolytope {
        if self.is_empty() {
            return ConvexPolytope::default();
        }
        let dist = |p: &Point3<f64>| normal.dot(&p.coords) - offset;
        let side = |p: &Point3<f64>| {
            let d = dist(p);
            if d > PLANE_EPS {
                Side::Outside
            } else if d < -PLANE_EPS {
                Side::Inside
            } else {
                Side::On
            }
        };
        let sides: Vec<Side> = self.vertices.iter().map(side).collect();
        if !sides.contains(&Side::Outside) {
            return self.clone();
        }
        if !sides.contains(&Side::Inside) {
            return ConvexPolytope::default();
        }

        let mut new_faces: Vec<Vec<Point3<f64>>> = Vec::with_capacity(self.faces.len() + 1);
        let mut cap: Vec<Point3<f64>> = Vec::new();
        for face in &self.faces {
            let n = face.len();
            let mut out = Vec::with_capacity(n + 1);
            for k in 0..n {
                let (i, j) = (face[k], face[(k + 1) % n]);
                let (si, sj) = (sides[i], sides[j]);
                let p = self.vertices[i];
                if si != Side::Outside {
                    out.push(p);
                    if si == Side::On {
                        cap.push(p);
                    }
                }
                let crosses = matches!(
                    (si, sj),
                    (Side::Inside, Side::Outside) | (Side::Outside, Side::Inside)
                );
                if crosses {
                    let x = edge_plane_intersection(&self.vertices[i], &self.vertices[j], &dist);
                    out.push(x);
                    cap.push(x);
                }
            }
            if out.len() >= 3 {
                new_faces.push(out);
            }
        }
        if let Some(cap_face) = order_cap(cap, normal) {
            new_faces.push(cap_face);
        }
        Self::from_face_points(new_faces)
    }

    /// Enclosed volume via the divergence theorem over fan-triangulated faces.
    pub fn volume(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let origin = self.vertices[0].coords;
        let mut six_v = 0.0;
        for face in &self.faces {
            let p0 = self.vertices[face[0]].coords - origin;
            for w in face[1..].windows(2) {
                let p1 = self.vertices[w[0]].coords - origin;
                let p2 = self.vertices[w[1]].coords - origin;
                six_v += p0.dot(&p1.cross(&p2));
            }
        }
        (six_v / 6.0).max(0.0)
    }
}

/// Intersection of segment `pq` with the plane. The endpoints are put in a
/// canonical order first so that the two faces sharing an edge produce the
/// identical point.
fn edge_plane_intersection(
    p: &Point3<f64>,
    q: &Point3<f64>,
    dist: &impl Fn(&Point3<f64>) -> f64,
) -> Point3<f64> {
    let (a, b) = if lex_cmp(p, q) == Ordering::Greater {
        (q, p)
    } else {
        (p, q)
    };
    let (da, db) = (dist(a), dist(b));
    let t = da / (da - db);
    a + (b - a) * t
}

fn lex_cmp(p: &Point3<f64>, q: &Point3<f64>) -> Ordering {
    p.x.total_cmp(&q.x)
        .then(p.y.total_cmp(&q.y))
        .then(p.z.total_cmp(&q.z))
}

/// Orders cap points counter-clockwise about `normal`.
fn order_cap(mut pts: Vec<Point3<f64>>, normal: &Vector3<f64>) -> Option<Vec<Point3<f64>>> {
    pts.sort_by(lex_cmp);
    pts.dedup_by(|a, b| (*a - *b).norm() <= PLANE_EPS);
    let mut unique: Vec<Point3<f64>> = Vec::with_capacity(pts.len());
    for p in pts {
        if unique.iter().all(|q| (q - p).norm() > PLANE_EPS) {
            unique.push(p);
        }
    }
    if unique.len() < 3 {
        return None;
    }
    let n = normal.normalize();
    let helper = if n.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let u = n.cross(&helper).normalize();
    let v = n.cross(&u);
    let centroid = unique
        .iter()
        .fold(Vector3::zeros(), |acc, p| acc + p.coords)
        / unique.len() as f64;
    let mut keyed: Vec<(f64, Point3<f64>)> = unique
        .into_iter()
        .map(|p| {
            let d = p.coords - centroid;
            (v.dot(&d).atan2(u.dot(&d)), p)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    Some(keyed.into_iter().map(|(_, p)| p).collect())
}

fn box_key_cmp(a: &Box3D, b: &Box3D) -> Ordering {
    let key = |x: &Box3D| {
        [
            x.center.x,
            x.center.y,
            x.center.z,
            x.dims.h,
            x.dims.w,
            x.dims.l,
            x.orientation.yaw,
            x.orientation.pitch,
            x.orientation.roll,
        ]
    };
    key(a)
        .iter()
        .zip(key(b).iter())
        .map(|(p, q)| p.total_cmp(q))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

/// Exact volume of `a ∩ b` in m³.
///
/// The polytope of one box is clipped successively against the six face
/// planes of the other. The argument pair is put in a canonical order first,
/// so the result is bit-identical under swapping.
pub fn intersection_volume(a: &Box3D, b: &Box3D) -> f64 {
    let (first, second) = if box_key_cmp(a, b) == Ordering::Greater {
        (b, a)
    } else {
        (a, b)
    };
    if (first.center - second.center).norm() > first.circumradius() + second.circumradius() {
        return 0.0;
    }
    let mut poly = ConvexPolytope::from_box(first);
    for (n, d) in second.face_planes() {
        poly = poly.clip(&n, d);
        if poly.is_empty() {
            return 0.0;
        }
    }
    poly.volume().clamp(0.0, a.volume().min(b.volume()))
}

/// Intersection over union of two boxes, in `[0, 1]`.
pub fn iou3d(a: &Box3D, b: &Box3D) -> f64 {
    let inter = intersection_volume(a, b);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.volume() + b.volume() - inter;
    (inter / union).clamp(0.0, 1.0)
}
