//! Parse, inspect and rewrite extended KITTI label files.

use roadside3d::formats::{parse_kitti, parse_labels, write_kitti, write_labels, LabelFormat};

const LABELS: &str = "\
Car 0.00 0 -1.58 587.0 173.3 614.1 200.1 1.65 1.67 3.64 -0.65 1.71 46.70 -1.59 0.02 -0.01
Pedestrian 0.10 1 0.21 -1 -1 -1 -1 1.72 0.55 0.80 4.10 1.60 18.20 0.0 0.0 0.0
Car 0.00 0 1.20 -1 -1 -1 -1 1.50 1.80 4.30 -3.20 1.65 30.00 1.25 0.00 0.00 0.87
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let records = parse_kitti(LABELS, "000042")?;
    for r in &records {
        let a = &r.annotation;
        let c = a.box3d.center;
        println!(
            "{:<10} occ {:?} trunc {:.2} center ({:.2}, {:.2}, {:.2}) box2d {} score {:?}",
            a.class_name,
            a.occlusion,
            a.truncation,
            c.x,
            c.y,
            c.z,
            if a.box2d.is_some() { "yes" } else { "no" },
            r.score
        );
    }

    let text = write_kitti(&records)?;
    print!("\nrewritten:\n{text}");
    assert_eq!(write_kitti(&parse_kitti(&text, "000042")?)?, text);

    let json = write_labels(&records, LabelFormat::ManifestJson)?;
    let back = parse_labels(&json, LabelFormat::ManifestJson, "000042")?;
    assert_eq!(back, records);
    println!(
        "\njson round trip: {} records, {} bytes",
        back.len(),
        json.len()
    );

    match parse_kitti("Car 0 0 0 -1 -1 -1 -1 1.5 -1.8 4 0 0 10 0 0 0", "bad") {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
