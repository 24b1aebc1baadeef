//! Synthetic roadside scenes: an elevated, downward-pitched camera looking
//! at objects on a flat ground plane, plus controlled corruption of the
//! ground truth into scored detections.
//!
//! The ground frame (`"lidar"`) has x forward, y left and z up, with its
//! origin on the ground directly below the camera.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{Matrix3, Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{
    import_lidar_box, lidar_to_camera_axes, project_box, CameraError, Intrinsics, LidarBox,
    RigidTransform,
};
use crate::datasets::SplitMix64;
use crate::formats::{
    AnnotationRecord, Calibration, DatasetManifest, DetectionRecord, FrameRecord,
};
use crate::geometry::{Box3D, Dimensions, EulerOrientation, GeometryError, RotationMatrix};

pub const GROUND_FRAME: &str = "lidar";
pub const CAMERA_FRAME: &str = "camera";

/// Placement attempts per object before giving up.
const MAX_ATTEMPTS: usize = 2000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid scene configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),
    #[error("could only place {placed} of {requested} objects")]
    Infeasible { placed: usize, requested: usize },
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// An object class with its sampling weight and nominal (h, w, l) in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassTemplate {
    pub name: String,
    pub weight: f64,
    pub dims: [f64; 3],
}

impl ClassTemplate {
    pub fn new(name: &str, weight: f64, dims: [f64; 3]) -> Self {
        Self {
            name: name.to_string(),
            weight,
            dims,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    /// `[width, height]` in pixels.
    pub image_size: [u32; 2],
    pub horizontal_fov_deg: f64,
    pub max_range: f64,
    /// Closest ground distance at which objects are placed.
    pub min_range: f64,
    /// Camera pitch bounds in degrees; negative looks down.
    pub pitch_range_deg: [f64; 2],
    pub camera_height: f64,
    /// Inclusive bounds on the number of objects per frame.
    pub objects_per_frame: [usize; 2],
    pub class_mix: Vec<ClassTemplate>,
    /// Relative spread applied to the template dimensions.
    pub dim_jitter: f64,
    pub weather: Vec<String>,
    pub time_of_day: Vec<String>,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            image_size: [1920, 1080],
            horizontal_fov_deg: 120.0,
            max_range: 150.0,
            min_range: 5.0,
            pitch_range_deg: [-45.0, -25.0],
            camera_height: 8.0,
            objects_per_frame: [5, 30],
            class_mix: vec![
                ClassTemplate::new("Car", 0.5, [1.5, 1.8, 4.3]),
                ClassTemplate::new("Truck", 0.1, [3.5, 2.5, 10.0]),
                ClassTemplate::new("Bus", 0.05, [3.2, 2.6, 12.0]),
                ClassTemplate::new("Pedestrian", 0.25, [1.75, 0.6, 0.6]),
                ClassTemplate::new("Bicycle", 0.1, [1.6, 0.6, 1.8]),
            ],
            dim_jitter: 0.1,
            weather: vec!["sunny".into(), "cloudy".into(), "foggy".into()],
            time_of_day: vec!["day".into(), "night".into()],
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        if self.image_size[0] == 0 || self.image_size[1] == 0 {
            return bad("image size must be positive".into());
        }
        if !(self.horizontal_fov_deg > 0.0 && self.horizontal_fov_deg < 180.0) {
            return bad(format!(
                "horizontal fov {} outside (0, 180)",
                self.horizontal_fov_deg
            ));
        }
        if !(self.max_range > 0.0 && self.max_range.is_finite()) {
            return bad(format!("max range {} must be positive", self.max_range));
        }
        if !(self.camera_height > 0.0 && self.camera_height < self.max_range) {
            return bad(format!(
                "camera height {} must lie in (0, max range)",
                self.camera_height
            ));
        }
        if !(self.min_range >= 0.0 && self.min_range < self.ground_range()) {
            return bad(format!(
                "min range {} leaves no room for objects",
                self.min_range
            ));
        }
        let [lo, hi] = self.pitch_range_deg;
        if !(lo <= hi && lo > -90.0 && hi < 0.0) {
            return bad(format!("pitch range [{lo}, {hi}] must lie within (-90, 0)"));
        }
        if self.objects_per_frame[0] > self.objects_per_frame[1] {
            return bad("objects_per_frame lower bound exceeds upper bound".into());
        }
        if self.class_mix.is_empty() && self.objects_per_frame[1] > 0 {
            return bad("class mix is empty".into());
        }
        if self
            .class_mix
            .iter()
            .any(|c| !(c.weight >= 0.0 && c.weight.is_finite()))
            || (!self.class_mix.is_empty() && self.class_mix.iter().all(|c| c.weight == 0.0))
        {
            return bad("class weights must be non-negative with a positive sum".into());
        }
        for c in &self.class_mix {
            Dimensions::new(c.dims[0], c.dims[1], c.dims[2])?;
        }
        if !(0.0..1.0).contains(&self.dim_jitter) {
            return bad(format!("dim jitter {} outside [0, 1)", self.dim_jitter));
        }
        Ok(())
    }

    pub fn class_names(&self) -> Vec<String> {
        self.class_mix.iter().map(|c| c.name.clone()).collect()
    }

    /// Largest ground distance keeping the camera distance within range.
    fn ground_range(&self) -> f64 {
        (self.max_range * self.max_range - self.camera_height * self.camera_height).sqrt()
    }

    pub fn intrinsics(&self) -> Result<Intrinsics, SynthError> {
        Ok(Intrinsics::from_fov(
            self.image_size[0],
            self.image_size[1],
            self.horizontal_fov_deg,
        )?)
    }
}

/// Ground-to-camera transform for a camera at height `h` with `pitch`
/// (radians, negative looks down).
pub fn ground_to_camera(pitch: f64, h: f64) -> Result<RigidTransform, SynthError> {
    let (s, c) = (-pitch).sin_cos();
    let tilt = Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c);
    let r = RotationMatrix::from_matrix(tilt * lidar_to_camera_axes().matrix(), 1e-9)?;
    let t = -(r.matrix() * Vector3::new(0.0, 0.0, h));
    Ok(RigidTransform::new(r, t, GROUND_FRAME, CAMERA_FRAME)?)
}

/// A generated frame with its calibration and the drawn camera pitch.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub frame: FrameRecord,
    pub calibration: Calibration,
    pub pitch_deg: f64,
    /// The objects as placed on the ground, parallel to `frame.annotations`.
    pub ground_boxes: Vec<LidarBox>,
}

impl Scene {
    fn camera(&self) -> &RigidTransform {
        &self.calibration.transforms[0]
    }
}

struct Placer<'a> {
    cfg: &'a SceneConfig,
    k: Intrinsics,
    t: RigidTransform,
}

impl Placer<'_> {
    fn sample_class(&self, rng: &mut impl Rng) -> &ClassTemplate {
        let total: f64 = self.cfg.class_mix.iter().map(|c| c.weight).sum();
        let mut x = rng.random::<f64>() * total;
        for c in &self.cfg.class_mix {
            if x < c.weight {
                return c;
            }
            x -= c.weight;
        }
        self.cfg
            .class_mix
            .iter()
            .rev()
            .find(|c| c.weight > 0.0)
            .expect("validated weights")
    }

    /// One candidate: a yaw-only box resting on the ground inside the
    /// horizontal field of view.
    fn candidate(&self, rng: &mut impl Rng) -> Result<(String, LidarBox), SynthError> {
        let class = self.sample_class(rng);
        let j = self.cfg.dim_jitter;
        let mut d = class.dims;
        for v in &mut d {
            *v *= 1.0 + rng.random_range(-j..=j);
        }
        let half_fov = self.cfg.horizontal_fov_deg.to_radians() / 2.0;
        let bearing = rng.random_range(-half_fov..half_fov);
        let rho = rng.random_range(self.cfg.min_range..self.cfg.ground_range());
        let heading = rng.random_range(-PI..PI);
        let dims = Dimensions::new(d[0], d[1], d[2])?;
        let center = [rho * bearing.cos(), rho * bearing.sin(), d[0] / 2.0];
        Ok((class.name.clone(), LidarBox::new(center, dims, heading)?))
    }

    fn acceptable(&self, b: &LidarBox, placed: &[LidarBox]) -> bool {
        let c = Point3::from(b.center);
        if (c - Point3::new(0.0, 0.0, self.cfg.camera_height)).norm() > self.cfg.max_range {
            return false;
        }
        let footprint = |x: &LidarBox| 0.5 * x.dims.w.hypot(x.dims.l);
        let clear = placed.iter().all(|o| {
            let dx = o.center[0] - b.center[0];
            let dy = o.center[1] - b.center[1];
            dx.hypot(dy) > footprint(o) + footprint(b)
        });
        clear && project_box(&self.k, &self.t, &b.to_box3d()).visible
    }

    fn annotate(
        &self,
        class: &str,
        b: &LidarBox,
        frame_id: &str,
    ) -> Result<AnnotationRecord, SynthError> {
        let box3d = import_lidar_box(&self.t, GROUND_FRAME, b)?;
        let proj = project_box(&self.k, &self.t, &b.to_box3d());
        let mut a = AnnotationRecord::new(class, box3d, frame_id);
        a.box2d = proj.rect;
        a.truncation = proj.truncation();
        Ok(a)
    }
}

/// Generates one frame. The pitch is drawn uniformly from the configured
/// range and objects are placed by rejection sampling: each must lie within
/// `max_range` of the camera, keep its footprint clear of earlier objects
/// and project at least partly into the image.
pub fn generate_scene(cfg: &SceneConfig, seed: u64, frame_id: &str) -> Result<Scene, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [lo, hi] = cfg.pitch_range_deg;
    let pitch_deg = if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    };
    let placer = Placer {
        cfg,
        k: cfg.intrinsics()?,
        t: ground_to_camera(pitch_deg.to_radians(), cfg.camera_height)?,
    };
    let [nmin, nmax] = cfg.objects_per_frame;
    let n = rng.random_range(nmin..=nmax);

    let mut frame = FrameRecord::new(frame_id, cfg.image_size);
    frame.calibration_ref = format!("calib/{frame_id}.json");
    if !cfg.weather.is_empty() {
        frame.tags.insert(
            "weather".into(),
            cfg.weather[rng.random_range(0..cfg.weather.len())].clone(),
        );
    }
    if !cfg.time_of_day.is_empty() {
        let t = &cfg.time_of_day[rng.random_range(0..cfg.time_of_day.len())];
        frame.tags.insert("time_of_day".into(), t.clone());
    }

    let mut ground_boxes = Vec::with_capacity(n);
    'objects: for _ in 0..n {
        for _ in 0..MAX_ATTEMPTS {
            let (class, b) = placer.candidate(&mut rng)?;
            if placer.acceptable(&b, &ground_boxes) {
                frame
                    .annotations
                    .push(placer.annotate(&class, &b, frame_id)?);
                ground_boxes.push(b);
                continue 'objects;
            }
        }
        return Err(SynthError::Infeasible {
            placed: ground_boxes.len(),
            requested: n,
        });
    }
    let calibration = Calibration {
        intrinsics: placer.k,
        transforms: vec![placer.t],
    };
    Ok(Scene {
        frame,
        calibration,
        pitch_deg,
        ground_boxes,
    })
}

/// Seed of frame `index` in a corpus generated from `seed`.
pub fn frame_seed(seed: u64, index: usize) -> u64 {
    let mut s = SplitMix64::new(seed ^ (index as u64).wrapping_mul(0xA076_1D64_78BD_642F));
    s.next_u64()
}

/// A generated dataset: manifest plus one calibration per frame, keyed by
/// the frames' `calibration_ref`.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub manifest: DatasetManifest,
    pub calibrations: BTreeMap<String, Calibration>,
    pub scenes: Vec<Scene>,
}

/// Generates `frames` scenes named `{prefix}{index:06}`, in parallel, each
/// from its own derived seed.
pub fn generate_corpus(
    cfg: &SceneConfig,
    name: &str,
    frames: usize,
    seed: u64,
) -> Result<Corpus, SynthError> {
    cfg.validate()?;
    let scenes: Vec<Scene> = (0..frames)
        .into_par_iter()
        .map(|i| generate_scene(cfg, frame_seed(seed, i), &format!("{i:06}")))
        .collect::<Result<_, _>>()?;
    let mut manifest = DatasetManifest::new(name, cfg.class_names());
    let mut calibrations = BTreeMap::new();
    for s in &scenes {
        manifest.frames.push(s.frame.clone());
        calibrations.insert(s.frame.calibration_ref.clone(), s.calibration.clone());
    }
    Ok(Corpus {
        manifest,
        calibrations,
        scenes,
    })
}

/// Controlled corruption of ground truth into detections.
///
/// Scores follow `exp(−m / score_scale)` where `m` is the sum of the norms
/// of the center (m), dimension (m) and angle (rad) perturbations, so
/// better boxes rank higher. Spurious boxes get a uniform score in (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub drop_rate: f64,
    /// Expected spurious detections per frame.
    pub fp_rate: f64,
    pub center_sigma: f64,
    pub dim_sigma: f64,
    pub angle_sigma: f64,
    pub score_scale: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self::none()
    }
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            drop_rate: 0.0,
            fp_rate: 0.0,
            center_sigma: 0.0,
            dim_sigma: 0.0,
            angle_sigma: 0.0,
            score_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if !(0.0..=1.0).contains(&self.drop_rate) {
            return Err(SynthError::InvalidNoise(format!(
                "drop rate {} outside [0, 1]",
                self.drop_rate
            )));
        }
        for (name, v) in [
            ("fp_rate", self.fp_rate),
            ("center_sigma", self.center_sigma),
            ("dim_sigma", self.dim_sigma),
            ("angle_sigma", self.angle_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(SynthError::InvalidNoise(format!(
                    "{name} {v} must be finite and non-negative"
                )));
            }
        }
        if !(self.score_scale > 0.0 && self.score_scale.is_finite()) {
            return Err(SynthError::InvalidNoise(format!(
                "score scale {} must be positive",
                self.score_scale
            )));
        }
        Ok(())
    }
}

fn gaussian(rng: &mut impl Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        0.0
    } else {
        Normal::new(0.0, sigma)
            .expect("validated sigma")
            .sample(rng)
    }
}

/// Turns a scene's ground truth into scored detections: each object is
/// dropped with `drop_rate`, survivors get Gaussian noise on center,
/// dimensions and angles, and a Poisson number of spurious objects is added
/// inside the view.
pub fn corrupt_detections(
    scene: &Scene,
    cfg: &SceneConfig,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<Vec<DetectionRecord>, SynthError> {
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for gt in &scene.frame.annotations {
        if noise.drop_rate > 0.0 && rng.random_bool(noise.drop_rate) {
            continue;
        }
        let b = gt.box3d;
        let dc = Vector3::from_fn(|_, _| gaussian(&mut rng, noise.center_sigma));
        let dd = Vector3::from_fn(|_, _| gaussian(&mut rng, noise.dim_sigma));
        let da = Vector3::from_fn(|_, _| gaussian(&mut rng, noise.angle_sigma));
        let mut a = gt.clone();
        if dc != Vector3::zeros() || dd != Vector3::zeros() || da != Vector3::zeros() {
            let dims = Dimensions::new(
                (b.dims.h + dd.x).max(0.05),
                (b.dims.w + dd.y).max(0.05),
                (b.dims.l + dd.z).max(0.05),
            )?;
            let o = b.orientation;
            let orientation = EulerOrientation::new(o.yaw + da.x, o.pitch + da.y, o.roll + da.z)?;
            a.box3d = Box3D::new(b.center + dc, dims, orientation)?;
        }
        let magnitude = dc.norm() + dd.norm() + da.norm();
        out.push(DetectionRecord::new(
            a,
            (-magnitude / noise.score_scale).exp(),
        ));
    }

    if noise.fp_rate > 0.0 {
        let count = Poisson::new(noise.fp_rate)
            .map_err(|e| SynthError::InvalidNoise(e.to_string()))?
            .sample(&mut rng) as usize;
        let placer = Placer {
            cfg,
            k: scene.calibration.intrinsics,
            t: scene.camera().clone(),
        };
        for _ in 0..count {
            for _ in 0..MAX_ATTEMPTS {
                let (class, b) = placer.candidate(&mut rng)?;
                if placer.acceptable(&b, &scene.ground_boxes) {
                    let a = placer.annotate(&class, &b, &scene.frame.frame_id)?;
                    out.push(DetectionRecord::new(a, rng.random_range(f64::EPSILON..1.0)));
                    break;
                }
            }
        }
    }
    Ok(out)
}

/// Detections for every scene in a corpus, keyed by frame id; frame `i`
/// uses `frame_seed(seed, i)`.
pub fn corrupt_corpus(
    corpus: &Corpus,
    cfg: &SceneConfig,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<BTreeMap<String, Vec<DetectionRecord>>, SynthError> {
    corpus
        .scenes
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            Ok((
                s.frame.frame_id.clone(),
                corrupt_detections(s, cfg, noise, frame_seed(seed, i))?,
            ))
        })
        .collect()
}
