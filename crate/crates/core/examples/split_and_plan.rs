//! Deterministic train/test splits and transfer-learning experiment plans.

use roadside3d::datasets::{
    build_experiment_plan, make_split, make_stratified_split, DatasetRef, DatasetRegistry,
    PlanKind, SplitRole,
};
use roadside3d::formats::{DatasetManifest, FrameRecord};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut m = DatasetManifest::new("intersection", vec!["Car".into(), "Pedestrian".into()]);
    for i in 0..20 {
        let mut f = FrameRecord::new(format!("{i:04}"), [1920, 1080]);
        f.calibration_ref = format!("calib/pole_{}.json", i % 3);
        m.frames.push(f);
    }

    let split = make_split(&m, 0.6, 42)?;
    let train: Vec<&str> = split.frames(SplitRole::Train).collect();
    println!("train ({}): {}", train.len(), train.join(" "));
    println!(
        "test  ({}): {}",
        split.count(SplitRole::Test),
        split.frames(SplitRole::Test).collect::<Vec<_>>().join(" ")
    );
    assert_eq!(make_split(&m, 0.6, 42)?, split);

    // each camera pole contributes to both sides
    let strat = make_stratified_split(&m, 0.6, 42)?;
    println!("stratified train: {}", strat.count(SplitRole::Train));
    let test = strat.subset(&m, SplitRole::Test);
    println!("test subset manifest has {} frames\n", test.frames.len());

    let registry =
        DatasetRegistry::new(["Synthetic Train", "Real Train", "Other Train", "Real Test"]);
    let r = DatasetRef::new;
    let plans = [
        build_experiment_plan(&registry, Some(r("Real Train")), vec![], r("Real Test"))?,
        build_experiment_plan(
            &registry,
            Some(r("Synthetic Train")),
            vec![r("Real Train")],
            r("Real Test"),
        )?,
        build_experiment_plan(
            &registry,
            Some(r("Synthetic Train")),
            vec![r("Other Train"), r("Real Train")],
            r("Real Test"),
        )?,
        build_experiment_plan(&registry, None, vec![r("Real Train")], r("Real Test"))?,
    ];
    for p in &plans {
        let kind = match p.kind() {
            PlanKind::SingleStage => "single stage",
            PlanKind::SingleStep => "single step",
            PlanKind::MultiStep => "multi step",
            PlanKind::Scratch => "scratch",
        };
        println!("{kind:<12} {} | {}", p.pretrain_label(), p.chain_label());
    }
    println!(
        "\n{}",
        plans[2]
            .clone()
            .with_metadata("iterations", 50_000)
            .to_json()
    );

    let unknown = build_experiment_plan(&registry, Some(r("Nope")), vec![], r("Real Test"));
    println!("unknown dataset: {}", unknown.unwrap_err());
    Ok(())
}
