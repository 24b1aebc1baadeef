//! Generate a small roadside corpus and write it out as manifest,
//! calibration and label files.

use std::fs;
use std::path::PathBuf;

use roadside3d::formats::{
    dataset_stats, write_calibration, write_kitti, write_manifest, LabelRecord,
};
use roadside3d::synth::{generate_corpus, SceneConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("roadside_synth"));
    let cfg = SceneConfig {
        objects_per_frame: [8, 16],
        ..SceneConfig::default()
    };
    let corpus = generate_corpus(&cfg, "synthetic", 12, 2024)?;

    fs::create_dir_all(out.join("calib"))?;
    fs::create_dir_all(out.join("labels"))?;
    fs::write(out.join("manifest.json"), write_manifest(&corpus.manifest)?)?;
    for (path, c) in &corpus.calibrations {
        fs::write(out.join(path), write_calibration(c))?;
    }
    for f in &corpus.manifest.frames {
        let records: Vec<LabelRecord> = f
            .annotations
            .iter()
            .map(|a| LabelRecord {
                annotation: a.clone(),
                score: None,
            })
            .collect();
        fs::write(
            out.join(format!("labels/{}.txt", f.frame_id)),
            write_kitti(&records)?,
        )?;
    }

    for s in corpus.scenes.iter().take(3) {
        println!(
            "{}: pitch {:.1} deg, {} objects, tags {:?}",
            s.frame.frame_id,
            s.pitch_deg,
            s.frame.annotations.len(),
            s.frame.tags
        );
    }
    println!("\n{}", dataset_stats(&corpus.manifest).table("synthetic"));
    println!("written to {}", out.display());
    Ok(())
}
