mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use roadside3d::camera::Rect2D;
use roadside3d::datasets::DifficultyLevel;
use roadside3d::eval::{evaluate, EvalConfig, EvalReport, Interpolation};
use roadside3d::formats::{AnnotationRecord, DetectionRecord};
use roadside3d::geometry::Box3D;

fn aps(r: &EvalReport) -> Vec<Option<f64>> {
    r.classes
        .values()
        .flat_map(|c| c.values().map(|s| s.ap))
        .collect()
}

fn far_box(frame: &str, class: &str) -> AnnotationRecord {
    let mut a = AnnotationRecord::new(class, Box3D::cube([500.0, 0.0, 500.0], 2.0).unwrap(), frame);
    a.box2d = Some(Rect2D {
        x1: 0.0,
        y1: 0.0,
        x2: 10.0,
        y2: 100.0,
    });
    a
}

#[test]
fn brute_force_r11() {
    let samples: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let cfg = EvalConfig {
        interpolation: Interpolation::R11,
        ..EvalConfig::default()
    };
    for seed in 1000..1050 {
        let (m, d) = common::random_instance(seed, 5, 20);
        let r = evaluate(&m, &d, &cfg).unwrap();
        for class in &m.class_taxonomy {
            for level in DifficultyLevel::EVALUATED {
                assert_eq!(
                    r.ap(class, level),
                    common::brute_force_ap(&m, &d, class, level, 0.5, &samples)
                );
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn counts_balance(seed in 0u64..100_000) {
        let (m, d) = common::random_instance(seed, 4, 12);
        let r = evaluate(&m, &d, &EvalConfig::default()).unwrap();
        for (class, cells) in &r.classes {
            let n_det: usize = d.values().flatten().filter(|x| x.class_name() == class).count();
            for c in cells.values() {
                prop_assert_eq!(c.tp + c.fn_, c.num_gt);
                prop_assert_eq!(c.tp + c.fp + c.ignored, n_det);
                if let Some(ap) = c.ap {
                    prop_assert!((0.0..=100.0).contains(&ap));
                }
            }
        }
    }

    #[test]
    fn extra_false_positive_never_helps(seed in 0u64..100_000, score in 0.0f64..1.0, class in 0usize..2) {
        let (m, mut d) = common::random_instance(seed, 4, 12);
        let before = evaluate(&m, &d, &EvalConfig::default()).unwrap();
        let frame = m.frames[0].frame_id.clone();
        let class = ["Car", "Pedestrian"][class];
        d.entry(frame.clone()).or_default().push(DetectionRecord::new(far_box(&frame, class), score));
        let after = evaluate(&m, &d, &EvalConfig::default()).unwrap();
        for (b, a) in aps(&before).iter().zip(aps(&after)) {
            prop_assert!(a.unwrap_or(0.0) <= b.unwrap_or(0.0) + 1e-12);
        }
    }

    #[test]
    fn top_ranked_true_positive_never_hurts(seed in 0u64..100_000, class in 0usize..2) {
        let (mut m, mut d) = common::random_instance(seed, 4, 12);
        let before = evaluate(&m, &d, &EvalConfig::default()).unwrap();
        let frame = m.frames[0].frame_id.clone();
        let class = ["Car", "Pedestrian"][class];
        let gt = far_box(&frame, class);
        m.frames[0].annotations.push(gt.clone());
        d.entry(frame).or_default().push(DetectionRecord::new(gt, 1.0));
        let after = evaluate(&m, &d, &EvalConfig::default()).unwrap();
        for (b, a) in aps(&before).iter().zip(aps(&after)) {
            if let Some(b) = b {
                prop_assert!(a.unwrap() >= b - 1e-12, "{} < {}", a.unwrap(), b);
            }
        }
    }

    #[test]
    fn input_order_irrelevant_for_distinct_scores(seed in 0u64..100_000, rot in 1usize..7) {
        let (m, mut d) = common::random_instance(seed, 4, 12);
        let mut k = 0.0;
        for dets in d.values_mut() {
            for x in dets.iter_mut() {
                k += 1.0;
                x.score = (x.score * 0.9 + k * 1e-6).min(1.0);
            }
        }
        let a = evaluate(&m, &d, &EvalConfig::default()).unwrap();
        for dets in d.values_mut() {
            let n = dets.len();
            if n > 0 {
                dets.rotate_left(rot % n);
                dets.reverse();
            }
        }
        let b = evaluate(&m, &d, &EvalConfig::default()).unwrap();
        prop_assert_eq!(aps(&a), aps(&b));
    }

    #[test]
    fn stricter_threshold_never_raises_ap(seed in 0u64..100_000) {
        let (m, d) = common::random_instance(seed, 4, 12);
        let at = |t: f64| aps(&evaluate(&m, &d, &EvalConfig { iou_threshold: t, ..EvalConfig::default() }).unwrap());
        let (lo, mid, hi) = (at(0.3), at(0.5), at(0.7));
        for i in 0..lo.len() {
            prop_assert!(mid[i] <= lo[i] && hi[i] <= mid[i], "{:?} {:?} {:?}", lo[i], mid[i], hi[i]);
        }
    }
}

#[test]
fn parallel_and_serial_agree() {
    let (m, d) = common::random_instance(77, 5, 20);
    let par = evaluate(&m, &d, &EvalConfig::default()).unwrap();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let serial = pool.install(|| evaluate(&m, &d, &EvalConfig::default()).unwrap());
    assert_eq!(par.to_json(), serial.to_json());
}

#[test]
fn per_class_thresholds_apply() {
    let (m, d) = common::random_instance(5, 5, 20);
    let loose = EvalConfig {
        class_thresholds: BTreeMap::from([("Car".to_string(), 0.1)]),
        ..EvalConfig::default()
    };
    let a = evaluate(&m, &d, &loose).unwrap();
    let b = evaluate(&m, &d, &EvalConfig::default()).unwrap();
    assert_eq!(a.classes["Pedestrian"], b.classes["Pedestrian"]);
}
