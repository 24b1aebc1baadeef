use serde::{Deserialize, Serialize};

use crate::datasets::DifficultyLevel;
use crate::formats::{AnnotationRecord, DetectionRecord};
use crate::geometry::iou3d;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub gt_idx: usize,
    pub det_idx: usize,
    pub iou: f64,
}

/// Matching outcome for one frame, class and difficulty level. Indices refer
/// to the input slices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub pairs: Vec<MatchedPair>,
    /// Counted ground truth left unmatched (false negatives).
    pub unmatched_gt: Vec<usize>,
    /// Detections left unmatched (false positives), in processing order.
    pub unmatched_det: Vec<usize>,
    /// Detections matched to ground truth that is not counted at this level;
    /// neither true nor false positives.
    #[serde(default)]
    pub ignored_det: Vec<usize>,
}

impl MatchResult {
    pub fn tp(&self) -> usize {
        self.pairs.len()
    }

    pub fn fp(&self) -> usize {
        self.unmatched_det.len()
    }

    pub fn fn_(&self) -> usize {
        self.unmatched_gt.len()
    }
}

/// Detection indices in descending score order; ties keep input order.
pub(crate) fn score_order(
    dets: &[DetectionRecord],
    keep: impl Fn(&DetectionRecord) -> bool,
) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).filter(|&i| keep(&dets[i])).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score));
    order
}

/// Index into `gts` of the untaken ground truth with the highest IoU at or
/// above the threshold.
fn best_gt(
    gts: &[usize],
    taken: &[bool],
    d: usize,
    thr: f64,
    iou: &impl Fn(usize, usize) -> f64,
) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (slot, &g) in gts.iter().enumerate() {
        if taken[slot] {
            continue;
        }
        let v = iou(g, d);
        if v >= thr && best.is_none_or(|(_, b)| v > b) {
            best = Some((slot, v));
        }
    }
    best
}

/// Greedy matching over eligible ground truth with a supplied IoU source.
/// Detections left over are then matched the same way against
/// `ignored_gt`; those that find a partner are ignored rather than counted
/// as false positives.
pub(crate) fn greedy_match(
    eligible_gt: &[usize],
    ignored_gt: &[usize],
    det_order: &[usize],
    iou_threshold: f64,
    iou: impl Fn(usize, usize) -> f64,
) -> MatchResult {
    let mut taken = vec![false; eligible_gt.len()];
    let mut result = MatchResult::default();
    let mut leftover = Vec::new();
    for &d in det_order {
        match best_gt(eligible_gt, &taken, d, iou_threshold, &iou) {
            Some((slot, v)) => {
                taken[slot] = true;
                result.pairs.push(MatchedPair {
                    gt_idx: eligible_gt[slot],
                    det_idx: d,
                    iou: v,
                });
            }
            None => leftover.push(d),
        }
    }
    let mut taken_ignored = vec![false; ignored_gt.len()];
    for d in leftover {
        match best_gt(ignored_gt, &taken_ignored, d, iou_threshold, &iou) {
            Some((slot, _)) => {
                taken_ignored[slot] = true;
                result.ignored_det.push(d);
            }
            None => result.unmatched_det.push(d),
        }
    }
    result.unmatched_gt = eligible_gt
        .iter()
        .zip(&taken)
        .filter(|(_, t)| !**t)
        .map(|(g, _)| *g)
        .collect();
    result
}

/// Greedy matching of `class` detections against `class` ground truth.
///
/// Detections are processed by descending score (ties by input order); each
/// takes the unmatched eligible ground truth with the highest IoU at or above
/// the threshold. Ground truth whose level is not included in `level`
/// (`gt_levels[i]`) is not counted; a detection left unmatched that overlaps
/// such ground truth is ignored instead of becoming a false positive.
pub fn match_frame(
    gts: &[AnnotationRecord],
    gt_levels: &[DifficultyLevel],
    dets: &[DetectionRecord],
    iou_threshold: f64,
    class: &str,
    level: DifficultyLevel,
) -> MatchResult {
    let (eligible, ignored): (Vec<usize>, Vec<usize>) = (0..gts.len())
        .filter(|&i| gts[i].class_name == class)
        .partition(|&i| level.includes(gt_levels[i]));
    let order = score_order(dets, |d| d.class_name() == class);
    greedy_match(&eligible, &ignored, &order, iou_threshold, |g, d| {
        iou3d(&gts[g].box3d, dets[d].box3d())
    })
}

/// Greedy matching ignoring class labels and difficulty; the basis of the
/// error breakdown.
pub fn match_class_agnostic(
    gts: &[AnnotationRecord],
    dets: &[DetectionRecord],
    iou_threshold: f64,
) -> MatchResult {
    let eligible: Vec<usize> = (0..gts.len()).collect();
    let order = score_order(dets, |_| true);
    greedy_match(&eligible, &[], &order, iou_threshold, |g, d| {
        iou3d(&gts[g].box3d, dets[d].box3d())
    })
}
