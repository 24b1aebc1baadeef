use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Recall sampling scheme for interpolated AP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Interpolation {
    /// Recall points `k/40` for `k = 1..=40`.
    #[default]
    R40,
    /// Recall points `k/10` for `k = 0..=10`.
    R11,
}

impl Interpolation {
    /// Sample points as `(numerator, denominator)` recall fractions.
    fn samples(self) -> impl Iterator<Item = (u64, u64)> {
        let (start, n) = match self {
            Self::R40 => (1, 40),
            Self::R11 => (0, 10),
        };
        (start..=n).map(move |k| (k, n))
    }
}

impl FromStr for Interpolation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "r40" | "40" => Ok(Self::R40),
            "r11" | "11" => Ok(Self::R11),
            other => Err(format!(
                "unknown interpolation '{other}' (expected r40 or r11)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub tp: usize,
    pub fp: usize,
    pub recall: f64,
    pub precision: f64,
}

/// Precision/recall after each detection in score order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PRCurve {
    pub num_gt: usize,
    pub points: Vec<PrPoint>,
}

impl PRCurve {
    /// Builds the curve from true-positive flags already sorted by descending
    /// score.
    pub fn from_ranked(tp_flags: impl IntoIterator<Item = bool>, num_gt: usize) -> Self {
        let (mut tp, mut fp) = (0usize, 0usize);
        let points = tp_flags
            .into_iter()
            .map(|is_tp| {
                if is_tp {
                    tp += 1;
                } else {
                    fp += 1;
                }
                PrPoint {
                    tp,
                    fp,
                    recall: if num_gt == 0 {
                        0.0
                    } else {
                        tp as f64 / num_gt as f64
                    },
                    precision: tp as f64 / (tp + fp) as f64,
                }
            })
            .collect();
        Self { num_gt, points }
    }

    pub fn max_recall(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.recall)
    }
}

/// Interpolated AP in percent: the mean over recall samples `r` of the
/// highest precision reached at any recall `≥ r` (0 when unreachable).
/// Recall comparisons use exact integer arithmetic.
pub fn average_precision(curve: &PRCurve, interpolation: Interpolation) -> f64 {
    if curve.num_gt == 0 || curve.points.is_empty() {
        return 0.0;
    }
    let n_gt = curve.num_gt as u64;
    // suffix maximum of precision
    let mut best = vec![0.0f64; curve.points.len() + 1];
    for i in (0..curve.points.len()).rev() {
        best[i] = best[i + 1].max(curve.points[i].precision);
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (k, n) in interpolation.samples() {
        count += 1;
        // tp / n_gt >= k / n  <=>  tp · n >= k · n_gt; tp is non-decreasing
        let first = curve
            .points
            .partition_point(|p| (p.tp as u64) * n < k * n_gt);
        sum += best[first];
    }
    100.0 * sum / count as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_detector() {
        let c = PRCurve::from_ranked([true; 7], 7);
        assert_eq!(average_precision(&c, Interpolation::R40), 100.0);
        assert_eq!(average_precision(&c, Interpolation::R11), 100.0);
    }

    #[test]
    fn half_recall_at_full_precision() {
        // recall 0.5 reaches samples k = 1..=20 of 40
        let c = PRCurve::from_ranked([true], 2);
        assert_eq!(average_precision(&c, Interpolation::R40), 50.0);
    }

    #[test]
    fn no_detections() {
        assert_eq!(
            average_precision(&PRCurve::from_ranked([], 5), Interpolation::R40),
            0.0
        );
    }

    #[test]
    fn fp_first_then_tp() {
        // precision 1/2 at recall 1
        let c = PRCurve::from_ranked([false, true], 1);
        assert_eq!(average_precision(&c, Interpolation::R40), 50.0);
        // R11 includes recall 0, still 1/2 everywhere
        assert_eq!(average_precision(&c, Interpolation::R11), 50.0);
    }

    #[test]
    fn interpolation_takes_later_max() {
        // tp, fp, tp with 2 gt: p = 1, .5, .667 at r = .5, .5, 1
        let c = PRCurve::from_ranked([true, false, true], 2);
        let ap = average_precision(&c, Interpolation::R40);
        let expected = 100.0 * (20.0 * 1.0 + 20.0 * (2.0 / 3.0)) / 40.0;
        assert!((ap - expected).abs() < 1e-12);
    }

    #[test]
    fn recall_monotone() {
        let c = PRCurve::from_ranked([true, false, true, true, false], 4);
        assert!(c.points.windows(2).all(|w| w[0].recall <= w[1].recall));
        assert_eq!(c.max_recall(), 0.75);
    }
}
