//! Render a results table for a set of experiment plans and compare two
//! reports cell by cell.

use roadside3d::datasets::{build_experiment_plan, DatasetRef, DatasetRegistry, DifficultyLevel};
use roadside3d::eval::{
    compare_reports, format_change, render_comparison, render_report, EvalReport,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let registry = DatasetRegistry::new(["Synthetic Train", "Real Train", "Real Test"]);
    let r = DatasetRef::new;
    let baseline = build_experiment_plan(&registry, Some(r("Real Train")), vec![], r("Real Test"))?
        .with_metadata("architecture", "MonoNet");
    let transfer = build_experiment_plan(
        &registry,
        Some(r("Synthetic Train")),
        vec![r("Real Train")],
        r("Real Test"),
    )?
    .with_metadata("architecture", "MonoNet");

    let before =
        EvalReport::from_ap_table([("Car", [3.10, 2.75, 2.40]), ("Pedestrian", [0.0, 0.0, 0.0])]);
    let after =
        EvalReport::from_ap_table([("Car", [9.80, 8.15, 7.02]), ("Pedestrian", [1.2, 0.9, 0.9])]);

    println!(
        "{}",
        render_report(&[(&baseline, &before), (&transfer, &after)])?
    );
    let cells = compare_reports(&before, &after)?;
    println!("{}", render_comparison(&cells));

    let moderate = cells
        .iter()
        .find(|c| c.class_name == "Car" && c.level == DifficultyLevel::Moderate)
        .unwrap();
    println!("Car moderate, whole percent: {}", moderate.format(0));
    println!("large change: {}", format_change(Some(4807.69), 0));
    Ok(())
}
