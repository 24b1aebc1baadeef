use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{project_box, RigidTransform};
use crate::datasets::{assign_difficulty, DifficultyLevel, ExperimentPlan};
use crate::formats::{Calibration, DatasetManifest, DetectionRecord, FrameRecord};
use crate::geometry::iou3d;

use super::ap::{average_precision, Interpolation, PRCurve};
use super::breakdown::{error_breakdown, ErrorBreakdown};
use super::matching::{greedy_match, score_order};
use super::EvalError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub iou_threshold: f64,
    /// Per-class overrides of `iou_threshold`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub class_thresholds: BTreeMap<String, f64>,
    pub interpolation: Interpolation,
    /// Also compute the class-agnostic error breakdown.
    #[serde(default)]
    pub error_breakdown: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            iou_threshold: 0.5,
            class_thresholds: BTreeMap::new(),
            interpolation: Interpolation::R40,
            error_breakdown: false,
        }
    }
}

impl EvalConfig {
    pub fn threshold_for(&self, class: &str) -> f64 {
        self.class_thresholds
            .get(class)
            .copied()
            .unwrap_or(self.iou_threshold)
    }

    fn validate(&self) -> Result<(), EvalError> {
        for t in std::iter::once(&self.iou_threshold).chain(self.class_thresholds.values()) {
            if !(*t > 0.0 && *t <= 1.0) {
                return Err(EvalError::InvalidThreshold(*t));
            }
        }
        Ok(())
    }
}

/// Statistics of one class at one difficulty level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    /// AP in percent; `None` when the cell has no ground truth.
    pub ap: Option<f64>,
    pub num_gt: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// Detections overlapping ground truth not counted at this level.
    #[serde(default)]
    pub ignored: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub iou_threshold: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub class_thresholds: BTreeMap<String, f64>,
    pub interpolation: Interpolation,
    pub classes: BTreeMap<String, BTreeMap<DifficultyLevel, CellStats>>,
    /// Mean AP over classes with ground truth; `None` when there are none.
    pub map: BTreeMap<DifficultyLevel, Option<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakdown: Option<ErrorBreakdown>,
}

impl EvalReport {
    /// A report carrying given AP values (Easy, Moderate, Hard) and no
    /// counts; used to tabulate published numbers.
    pub fn from_ap_table<'a>(rows: impl IntoIterator<Item = (&'a str, [f64; 3])>) -> Self {
        let classes: BTreeMap<_, _> = rows
            .into_iter()
            .map(|(class, aps)| {
                let cells = DifficultyLevel::EVALUATED
                    .iter()
                    .zip(aps)
                    .map(|(&level, ap)| {
                        let cell = CellStats {
                            ap: Some(ap),
                            num_gt: 0,
                            tp: 0,
                            fp: 0,
                            fn_: 0,
                            ignored: 0,
                        };
                        (level, cell)
                    })
                    .collect();
                (class.to_string(), cells)
            })
            .collect();
        let config = EvalConfig::default();
        Self {
            iou_threshold: config.iou_threshold,
            class_thresholds: BTreeMap::new(),
            interpolation: config.interpolation,
            map: mean_ap(&classes),
            classes,
            breakdown: None,
        }
    }

    pub fn ap(&self, class: &str, level: DifficultyLevel) -> Option<f64> {
        self.classes.get(class)?.get(&level)?.ap
    }

    pub fn map_at(&self, level: DifficultyLevel) -> Option<f64> {
        self.map.get(&level).copied().flatten()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).unwrap_or_default();
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        serde_json::from_str(text).map_err(|e| EvalError::Report(e.to_string()))
    }

    /// Plain-text listing of every cell.
    pub fn summary(&self) -> String {
        let mut out = String::from(
            "| Class | Difficulty | AP | GT | TP | FP | FN |\n|---|---|---|---|---|---|---|\n",
        );
        for (class, cells) in &self.classes {
            for (level, c) in cells {
                out.push_str(&format!(
                    "| {class} | {level} | {} | {} | {} | {} | {} |\n",
                    fmt_ap(c.ap),
                    c.num_gt,
                    c.tp,
                    c.fp,
                    c.fn_
                ));
            }
        }
        for (level, m) in &self.map {
            out.push_str(&format!("| mAP | {level} | {} | | | | |\n", fmt_ap(*m)));
        }
        out
    }
}

fn fmt_ap(ap: Option<f64>) -> String {
    ap.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"))
}

fn mean_ap(
    classes: &BTreeMap<String, BTreeMap<DifficultyLevel, CellStats>>,
) -> BTreeMap<DifficultyLevel, Option<f64>> {
    DifficultyLevel::EVALUATED
        .iter()
        .map(|&level| {
            let aps: Vec<f64> = classes.values().filter_map(|c| c.get(&level)?.ap).collect();
            let m = (!aps.is_empty()).then(|| aps.iter().sum::<f64>() / aps.len() as f64);
            (level, m)
        })
        .collect()
}

/// Matching outcome of one frame for one class and level.
struct FrameCell {
    num_gt: usize,
    ignored: usize,
    /// `(score, is_tp)` in processing order.
    ranked: Vec<(f64, bool)>,
}

struct FrameResult {
    cells: BTreeMap<(usize, DifficultyLevel), FrameCell>,
    /// `(gt_idx, det_idx)` from class-agnostic matching.
    agnostic: Vec<(usize, usize)>,
}

fn evaluate_frame(
    frame: &FrameRecord,
    dets: &[DetectionRecord],
    classes: &[String],
    config: &EvalConfig,
) -> Result<FrameResult, EvalError> {
    let gts = &frame.annotations;
    let mut levels = Vec::with_capacity(gts.len());
    for g in gts {
        let rect = g
            .box2d
            .ok_or_else(|| EvalError::MissingBox2d(frame.frame_id.clone()))?;
        levels.push(assign_difficulty(g, rect.height()));
    }
    let iou: Vec<Vec<f64>> = gts
        .iter()
        .map(|g| dets.iter().map(|d| iou3d(&g.box3d, d.box3d())).collect())
        .collect();

    let mut cells = BTreeMap::new();
    for (ci, class) in classes.iter().enumerate() {
        let order = score_order(dets, |d| d.class_name() == class);
        let thr = config.threshold_for(class);
        for level in DifficultyLevel::EVALUATED {
            let (eligible, ignored): (Vec<usize>, Vec<usize>) = (0..gts.len())
                .filter(|&i| gts[i].class_name == *class)
                .partition(|&i| level.includes(levels[i]));
            let m = greedy_match(&eligible, &ignored, &order, thr, |g, d| iou[g][d]);
            let matched: BTreeSet<usize> = m.pairs.iter().map(|p| p.det_idx).collect();
            let skip: BTreeSet<usize> = m.ignored_det.iter().copied().collect();
            let ranked = order
                .iter()
                .filter(|d| !skip.contains(d))
                .map(|&d| (dets[d].score, matched.contains(&d)))
                .collect();
            cells.insert(
                (ci, level),
                FrameCell {
                    num_gt: eligible.len(),
                    ignored: skip.len(),
                    ranked,
                },
            );
        }
    }

    let agnostic = if config.error_breakdown {
        let all: Vec<usize> = (0..gts.len()).collect();
        let order = score_order(dets, |_| true);
        greedy_match(&all, &[], &order, config.iou_threshold, |g, d| iou[g][d])
            .pairs
            .iter()
            .map(|p| (p.gt_idx, p.det_idx))
            .collect()
    } else {
        Vec::new()
    };
    Ok(FrameResult { cells, agnostic })
}

/// Evaluates detections (keyed by frame id) against the manifest's ground
/// truth.
///
/// Difficulty is assigned from each annotation's `box2d` height, so every
/// ground-truth record needs one (see [`fill_box2d`]). Frames are matched
/// independently, possibly in parallel; detections are then pooled per
/// class and level in frame-id order and stably sorted by score, so the
/// result does not depend on scheduling.
pub fn evaluate(
    manifest: &DatasetManifest,
    detections: &BTreeMap<String, Vec<DetectionRecord>>,
    config: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    config.validate()?;
    let known: BTreeSet<&str> = manifest.frame_ids();
    for (frame_id, dets) in detections {
        if !known.contains(frame_id.as_str()) {
            return Err(EvalError::UnknownFrame(frame_id.clone()));
        }
        for d in dets {
            if !manifest.class_taxonomy.iter().any(|c| c == d.class_name()) {
                return Err(EvalError::UnknownClass(d.class_name().to_string()));
            }
        }
    }
    for f in &manifest.frames {
        if let Some(a) = f
            .annotations
            .iter()
            .find(|a| !manifest.class_taxonomy.contains(&a.class_name))
        {
            return Err(EvalError::UnknownClass(a.class_name.clone()));
        }
    }

    let mut frames: Vec<&FrameRecord> = manifest.frames.iter().collect();
    frames.sort_by(|a, b| a.frame_id.cmp(&b.frame_id));
    let classes = &manifest.class_taxonomy;
    let empty = Vec::new();
    let results: Vec<FrameResult> = frames
        .par_iter()
        .map(|f| {
            let dets = detections.get(&f.frame_id).unwrap_or(&empty);
            evaluate_frame(f, dets, classes, config)
        })
        .collect::<Result<_, _>>()?;

    let mut report_classes = BTreeMap::new();
    for (ci, class) in classes.iter().enumerate() {
        let mut cells = BTreeMap::new();
        for level in DifficultyLevel::EVALUATED {
            let mut pooled: Vec<(f64, bool)> = Vec::new();
            let (mut num_gt, mut ignored) = (0, 0);
            for r in &results {
                let c = &r.cells[&(ci, level)];
                num_gt += c.num_gt;
                ignored += c.ignored;
                pooled.extend_from_slice(&c.ranked);
            }
            pooled.sort_by(|a, b| b.0.total_cmp(&a.0));
            let curve = PRCurve::from_ranked(pooled.iter().map(|p| p.1), num_gt);
            let tp = pooled.iter().filter(|p| p.1).count();
            let cell = CellStats {
                ap: (num_gt > 0).then(|| average_precision(&curve, config.interpolation)),
                num_gt,
                tp,
                fp: pooled.len() - tp,
                fn_: num_gt - tp,
                ignored,
            };
            cells.insert(level, cell);
        }
        report_classes.insert(class.clone(), cells);
    }

    let breakdown = if config.error_breakdown {
        let pairs: Vec<_> = frames
            .iter()
            .zip(&results)
            .flat_map(|(f, r)| {
                let dets = detections.get(&f.frame_id).unwrap_or(&empty);
                r.agnostic
                    .iter()
                    .map(move |&(g, d)| (&f.annotations[g], &dets[d]))
            })
            .collect();
        match error_breakdown(&pairs) {
            Ok(b) => Some(b),
            Err(EvalError::EmptyInput(_)) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    Ok(EvalReport {
        iou_threshold: config.iou_threshold,
        class_thresholds: config.class_thresholds.clone(),
        interpolation: config.interpolation,
        map: mean_ap(&report_classes),
        classes: report_classes,
        breakdown,
    })
}

/// Sets `box2d` (and the truncation, if `update_truncation`) of every
/// annotation lacking one by projecting its box with the frame's camera.
/// Annotations are already in the camera frame.
pub fn fill_box2d(frame: &mut FrameRecord, calibration: &Calibration, update_truncation: bool) {
    let identity = RigidTransform::identity("object", "camera").expect("distinct frame labels");
    for a in &mut frame.annotations {
        if a.box2d.is_some() {
            continue;
        }
        let p = project_box(&calibration.intrinsics, &identity, &a.box3d);
        a.box2d = Some(p.rect.unwrap_or_default());
        if update_truncation {
            a.truncation = p.truncation();
        }
    }
}

/// Relative change of one cell, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeCell {
    /// Class name, or `mAP` for the aggregate row.
    pub class_name: String,
    pub level: DifficultyLevel,
    pub baseline: Option<f64>,
    pub treatment: Option<f64>,
    /// `(treatment − baseline) / baseline × 100` rounded to one decimal;
    /// `None` ("undefined") when the baseline is zero or missing.
    pub change: Option<f64>,
}

impl ChangeCell {
    /// `+215.8%`, `+4,808%` (with `decimals = 0`) or `undefined`.
    pub fn format(&self, decimals: usize) -> String {
        format_change(self.change, decimals)
    }
}

pub fn format_change(change: Option<f64>, decimals: usize) -> String {
    let Some(c) = change else {
        return "undefined".to_string();
    };
    let s = format!("{:.*}", decimals, c.abs());
    let (int, frac) = s
        .split_once('.')
        .map_or((s.as_str(), None), |(i, f)| (i, Some(f)));
    let mut grouped = String::new();
    for (i, ch) in int.chars().enumerate() {
        if i > 0 && (int.len() - i) % 3 == 0 {
            grouped.push(',');
        }
        grouped.push(ch);
    }
    let sign = if c < 0.0 && s.chars().any(|ch| ch.is_ascii_digit() && ch != '0') {
        "-"
    } else {
        "+"
    };
    match frac {
        Some(f) => format!("{sign}{grouped}.{f}%"),
        None => format!("{sign}{grouped}%"),
    }
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

fn relative_change(baseline: Option<f64>, treatment: Option<f64>) -> Option<f64> {
    match (baseline, treatment) {
        (Some(b), Some(t)) if b > 0.0 => Some(round1((t - b) / b * 100.0)),
        _ => None,
    }
}

/// Per-cell percent change from `baseline` to `treatment`, followed by the
/// mAP rows. Both reports must cover the same classes and levels.
pub fn compare_reports(
    baseline: &EvalReport,
    treatment: &EvalReport,
) -> Result<Vec<ChangeCell>, EvalError> {
    let shape = |r: &EvalReport| -> Vec<(String, Vec<DifficultyLevel>)> {
        r.classes
            .iter()
            .map(|(c, cells)| (c.clone(), cells.keys().copied().collect()))
            .collect()
    };
    if shape(baseline) != shape(treatment) {
        return Err(EvalError::StructureMismatch(
            "reports cover different classes or difficulty levels".into(),
        ));
    }
    let mut out = Vec::new();
    for (class, cells) in &baseline.classes {
        for (&level, cell) in cells {
            let t = treatment.classes[class][&level].ap;
            out.push(ChangeCell {
                class_name: class.clone(),
                level,
                baseline: cell.ap,
                treatment: t,
                change: relative_change(cell.ap, t),
            });
        }
    }
    for level in DifficultyLevel::EVALUATED {
        let (b, t) = (baseline.map_at(level), treatment.map_at(level));
        out.push(ChangeCell {
            class_name: "mAP".into(),
            level,
            baseline: b,
            treatment: t,
            change: relative_change(b, t),
        });
    }
    Ok(out)
}

/// Markdown table of the change cells.
pub fn render_comparison(cells: &[ChangeCell]) -> String {
    let mut out = String::from(
        "| Class | Difficulty | Baseline | Treatment | Change |\n|---|---|---|---|---|\n",
    );
    for c in cells {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} |\n",
            c.class_name,
            c.level,
            fmt_ap(c.baseline),
            fmt_ap(c.treatment),
            c.format(1)
        ));
    }
    out
}

/// One table row per (plan, report): the plan's datasets followed by mAP at
/// Easy, Moderate and Hard with two decimals. The architecture column comes
/// from the plan's `architecture` metadata entry.
pub fn render_report(rows: &[(&ExperimentPlan, &EvalReport)]) -> Result<String, EvalError> {
    if rows.is_empty() {
        return Err(EvalError::EmptyInput("no reports to render".into()));
    }
    let mut out = String::from(
        "| Architecture | Pre-Train Set | Fine-Tuning Set | Evaluation Set | Easy | Moderate | Hard |\n\
         |---|---|---|---|---|---|---|\n",
    );
    for (plan, report) in rows {
        let arch = plan
            .training_metadata
            .get("architecture")
            .and_then(|v| v.as_str())
            .unwrap_or("-");
        let aps: Vec<String> = DifficultyLevel::EVALUATED
            .iter()
            .map(|&l| fmt_ap(report.map_at(l)))
            .collect();
        out.push_str(&format!(
            "| {arch} | {} | {} | {} | {} |\n",
            plan.pretrain_label(),
            plan.chain_label(),
            plan.eval,
            aps.join(" | ")
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::Rect2D;
    use crate::formats::AnnotationRecord;
    use crate::geometry::Box3D;

    fn gt(frame: &str, x: f64, class: &str) -> AnnotationRecord {
        let mut a = AnnotationRecord::new(class, Box3D::cube([x, 0.0, 20.0], 2.0).unwrap(), frame);
        a.box2d = Some(Rect2D {
            x1: 0.0,
            y1: 0.0,
            x2: 50.0,
            y2: 100.0,
        });
        a
    }

    fn manifest(frames: &[(&str, Vec<AnnotationRecord>)]) -> DatasetManifest {
        let mut m = DatasetManifest::new("t", vec!["Car".into(), "Pedestrian".into()]);
        for (id, anns) in frames {
            let mut f = FrameRecord::new(*id, [1920, 1080]);
            f.annotations = anns.clone();
            m.frames.push(f);
        }
        m
    }

    fn perfect(m: &DatasetManifest) -> BTreeMap<String, Vec<DetectionRecord>> {
        m.frames
            .iter()
            .map(|f| {
                let d = f
                    .annotations
                    .iter()
                    .map(|a| DetectionRecord::new(a.clone(), 1.0))
                    .collect();
                (f.frame_id.clone(), d)
            })
            .collect()
    }

    #[test]
    fn perfect_detections_score_100() {
        let m = manifest(&[
            ("a", vec![gt("a", 0.0, "Car"), gt("a", 5.0, "Car")]),
            ("b", vec![gt("b", 0.0, "Car")]),
        ]);
        let r = evaluate(&m, &perfect(&m), &EvalConfig::default()).unwrap();
        for level in DifficultyLevel::EVALUATED {
            assert_eq!(r.ap("Car", level), Some(100.0));
            assert_eq!(r.map_at(level), Some(100.0));
            assert_eq!(r.ap("Pedestrian", level), None);
        }
    }

    #[test]
    fn empty_detections() {
        let m = manifest(&[("a", vec![gt("a", 0.0, "Car"), gt("a", 5.0, "Car")])]);
        let r = evaluate(&m, &BTreeMap::new(), &EvalConfig::default()).unwrap();
        let c = r.classes["Car"][&DifficultyLevel::Hard];
        assert_eq!((c.ap, c.fn_, c.num_gt, c.tp, c.fp), (Some(0.0), 2, 2, 0, 0));
    }

    #[test]
    fn unknown_frame_and_class() {
        let m = manifest(&[("a", vec![gt("a", 0.0, "Car")])]);
        let mut d = perfect(&m);
        d.insert("zz".into(), vec![]);
        assert!(
            matches!(evaluate(&m, &d, &EvalConfig::default()), Err(EvalError::UnknownFrame(f)) if f == "zz")
        );
        let mut d = perfect(&m);
        d.get_mut("a").unwrap()[0].annotation.class_name = "Tram".into();
        assert!(
            matches!(evaluate(&m, &d, &EvalConfig::default()), Err(EvalError::UnknownClass(c)) if c == "Tram")
        );
    }

    #[test]
    fn missing_box2d_is_reported() {
        let mut m = manifest(&[("a", vec![gt("a", 0.0, "Car")])]);
        m.frames[0].annotations[0].box2d = None;
        assert!(matches!(
            evaluate(&m, &BTreeMap::new(), &EvalConfig::default()),
            Err(EvalError::MissingBox2d(_))
        ));
    }

    #[test]
    fn bad_threshold() {
        let m = manifest(&[]);
        let cfg = EvalConfig {
            iou_threshold: 0.0,
            ..EvalConfig::default()
        };
        assert!(matches!(
            evaluate(&m, &BTreeMap::new(), &cfg),
            Err(EvalError::InvalidThreshold(_))
        ));
    }

    #[test]
    fn breakdown_of_perfect_run() {
        let m = manifest(&[("a", vec![gt("a", 0.0, "Car"), gt("a", 5.0, "Pedestrian")])]);
        let cfg = EvalConfig {
            error_breakdown: true,
            ..EvalConfig::default()
        };
        let b = evaluate(&m, &perfect(&m), &cfg).unwrap().breakdown.unwrap();
        assert_eq!(b.pairs, 2);
        assert_eq!(b.pos_error, 0.0);
    }

    #[test]
    fn json_round_trip() {
        let m = manifest(&[("a", vec![gt("a", 0.0, "Car")])]);
        let r = evaluate(&m, &perfect(&m), &EvalConfig::default()).unwrap();
        assert_eq!(EvalReport::from_json(&r.to_json()).unwrap(), r);
    }

    #[test]
    fn change_formatting() {
        assert_eq!(format_change(Some(4807.7), 0), "+4,808%");
        assert_eq!(format_change(Some(215.8), 1), "+215.8%");
        assert_eq!(format_change(Some(-12.5), 1), "-12.5%");
        assert_eq!(format_change(Some(0.0), 1), "+0.0%");
        assert_eq!(format_change(None, 1), "undefined");
    }

    #[test]
    fn equal_reports_have_zero_change() {
        let r = EvalReport::from_ap_table([("Car", [6.6, 8.6, 8.65])]);
        let cells = compare_reports(&r, &r).unwrap();
        assert!(cells.iter().all(|c| c.change == Some(0.0)));
    }

    #[test]
    fn zero_baseline_is_undefined() {
        let b = EvalReport::from_ap_table([("Car", [0.0, 1.0, 1.0])]);
        let t = EvalReport::from_ap_table([("Car", [1.0, 1.0, 1.0])]);
        let cells = compare_reports(&b, &t).unwrap();
        assert_eq!(cells[0].format(1), "undefined");
    }

    #[test]
    fn structure_mismatch() {
        let b = EvalReport::from_ap_table([("Car", [1.0, 1.0, 1.0])]);
        let t = EvalReport::from_ap_table([("Truck", [1.0, 1.0, 1.0])]);
        assert!(matches!(
            compare_reports(&b, &t),
            Err(EvalError::StructureMismatch(_))
        ));
    }

    #[test]
    fn render_needs_rows() {
        assert!(render_report(&[]).is_err());
    }
}
