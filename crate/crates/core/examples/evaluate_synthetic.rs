//! Evaluate noisy detections on a generated corpus, with the per-component
//! error breakdown.

use roadside3d::datasets::DifficultyLevel;
use roadside3d::eval::{evaluate, EvalConfig, Interpolation};
use roadside3d::synth::{corrupt_corpus, generate_corpus, NoiseSpec, SceneConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SceneConfig::default();
    let corpus = generate_corpus(&cfg, "synthetic", 40, 7)?;

    let mut config = EvalConfig {
        error_breakdown: true,
        ..EvalConfig::default()
    };
    config.class_thresholds.insert("Pedestrian".into(), 0.25);
    config.class_thresholds.insert("Bicycle".into(), 0.25);

    for (label, noise) in [
        ("perfect", NoiseSpec::none()),
        (
            "jitter",
            NoiseSpec {
                center_sigma: 0.15,
                dim_sigma: 0.05,
                angle_sigma: 0.03,
                ..NoiseSpec::none()
            },
        ),
        (
            "misses",
            NoiseSpec {
                drop_rate: 0.3,
                fp_rate: 2.0,
                ..NoiseSpec::none()
            },
        ),
    ] {
        let dets = corrupt_corpus(&corpus, &cfg, &noise, 8)?;
        let report = evaluate(&corpus.manifest, &dets, &config)?;
        let m = |l| {
            report
                .map_at(l)
                .map_or("-".to_string(), |v| format!("{v:.2}"))
        };
        println!(
            "{label:<8} mAP easy {} moderate {} hard {}",
            m(DifficultyLevel::Easy),
            m(DifficultyLevel::Moderate),
            m(DifficultyLevel::Hard)
        );
        if let Some(b) = report.breakdown {
            println!(
                "         {} pairs: pos {:.3} m, dim {:.3} m, ori {:.4} rad",
                b.pairs, b.pos_error, b.dim_error, b.ori_error
            );
        }
        if label == "misses" {
            print!("\n{}", report.summary());
        }
    }

    let dets = corrupt_corpus(
        &corpus,
        &cfg,
        &NoiseSpec {
            center_sigma: 0.3,
            ..NoiseSpec::none()
        },
        8,
    )?;
    for interpolation in [Interpolation::R40, Interpolation::R11] {
        let cfg = EvalConfig {
            interpolation,
            ..EvalConfig::default()
        };
        let r = evaluate(&corpus.manifest, &dets, &cfg)?;
        println!(
            "{interpolation:?}: Car moderate AP {:.2}",
            r.ap("Car", DifficultyLevel::Moderate).unwrap_or(0.0)
        );
    }
    Ok(())
}
