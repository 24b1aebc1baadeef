//! Command-line front end. [`run`] parses arguments, executes one
//! subcommand and returns the process exit status: 0 on success, 1 on
//! usage or validation errors, 2 on I/O errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{debug, info};
use rayon::prelude::*;

use crate::camera::{project_box, transform_box, RigidTransform};
use crate::datasets::{make_split, make_stratified_split, DatasetRef, ExperimentPlan};
use crate::eval::{
    compare_reports, evaluate, fill_box2d, render_comparison, render_report, EvalConfig,
    EvalReport, Interpolation,
};
use crate::formats::{
    dataset_stats, parse_calibration, parse_labels, parse_manifest, write_calibration, write_kitti,
    write_labels, write_manifest, ClassMapping, DatasetStats, LabelFormat, LabelRecord,
};
use crate::synth::{corrupt_corpus, generate_corpus, NoiseSpec, SceneConfig};

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or invalid input content.
    Validation(String),
    /// Unreadable input or unwritable output.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 1,
            Self::Io(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Validation(m) => write!(f, "error: {m}"),
            Self::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Label files in `dir` (sorted by name) with their frame ids (file stems).
fn label_files(dir: &Path) -> Result<Vec<(String, PathBuf)>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for e in entries {
        let p = e.map_err(|e| CliError::Io(e.to_string()))?.path();
        let ext = p.extension().and_then(|s| s.to_str());
        if p.is_file() && matches!(ext, Some("txt") | Some("json")) {
            let stem = p
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            files.push((stem, p));
        }
    }
    files.sort();
    Ok(files)
}

fn extension(format: LabelFormat) -> &'static str {
    match format {
        LabelFormat::KittiExt => "txt",
        LabelFormat::ManifestJson => "json",
    }
}

fn guess_format(path: &Path) -> LabelFormat {
    match path.extension().and_then(|s| s.to_str()) {
        Some("json") => LabelFormat::ManifestJson,
        _ => LabelFormat::KittiExt,
    }
}

fn parse_file(
    path: &Path,
    format: LabelFormat,
    frame_id: &str,
) -> Result<Vec<LabelRecord>, CliError> {
    parse_labels(&read(path)?, format, frame_id)
        .map_err(|e| invalid(format!("{}: {e}", path.display())))
}

#[derive(Debug, Parser)]
#[command(
    name = "roadside3d",
    version,
    about = "3D box geometry, label conversion and mAP evaluation for roadside monocular 3D detection"
)]
struct Cli {
    /// Worker threads for per-frame work (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert label files or a manifest between formats.
    Convert(ConvertArgs),
    /// Move labels between sensor frames using a calibration file.
    Transform(TransformArgs),
    /// Write a seeded train/test split of a manifest.
    Split(SplitArgs),
    /// Evaluate detections against a ground-truth manifest.
    Eval(EvalArgs),
    /// Percent change between two evaluation reports.
    Compare(CompareArgs),
    /// Generate a synthetic corpus with optional corrupted detections.
    Synth(SynthArgs),
    /// Frame, box and class counts of manifests.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
struct ConvertArgs {
    /// Label file, directory of label files, or manifest (with --manifest).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Input format (default: from the file extension).
    #[arg(long)]
    from: Option<LabelFormat>,
    #[arg(long, default_value = "kitti_ext")]
    to: LabelFormat,
    /// Treat the input as a manifest and write one label file per frame
    /// into the output directory.
    #[arg(long)]
    manifest: bool,
    /// JSON object renaming classes; unmapped classes are dropped.
    #[arg(long)]
    class_map: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TransformArgs {
    #[arg(long)]
    calib: PathBuf,
    #[arg(long, default_value = "lidar")]
    from: String,
    #[arg(long, default_value = "camera")]
    to: String,
    /// Directory of label files in the source frame.
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "kitti_ext")]
    format: LabelFormat,
    /// Recompute 2D boxes and truncation by projecting into the image
    /// (target frame must be the camera).
    #[arg(long)]
    project: bool,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Train fraction in (0, 1).
    #[arg(long, default_value_t = 0.6)]
    fraction: f64,
    /// Split each calibration group separately.
    #[arg(long)]
    stratify: bool,
    /// Output split file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Ground-truth manifest.
    #[arg(long)]
    gt: PathBuf,
    /// Directory with one label file per frame id.
    #[arg(long)]
    pred: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    iou: f64,
    /// Per-class threshold, e.g. `Pedestrian=0.25` (repeatable).
    #[arg(long = "class-iou", value_parser = parse_class_iou)]
    class_iou: Vec<(String, f64)>,
    #[arg(long, default_value = "r40")]
    interpolation: Interpolation,
    /// Directory that calibration_ref paths are relative to (default: the
    /// manifest's directory); used for annotations without 2D boxes.
    #[arg(long)]
    calib_dir: Option<PathBuf>,
    /// Experiment plan whose datasets label the table row.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Include the class-agnostic error breakdown.
    #[arg(long)]
    breakdown: bool,
    /// Write the JSON report here.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn parse_class_iou(s: &str) -> Result<(String, f64), String> {
    let (c, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected CLASS=THRESHOLD, got '{s}'"))?;
    let v: f64 = v.parse().map_err(|e| format!("bad threshold '{v}': {e}"))?;
    Ok((c.to_string(), v))
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    baseline: PathBuf,
    #[arg(long)]
    treatment: PathBuf,
    /// Write the change cells as JSON here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    frames: usize,
    #[arg(long, default_value = "synthetic")]
    name: String,
    /// Scene configuration JSON (default: built-in roadside camera).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write corrupted detections to `<out>/detections`.
    #[arg(long)]
    detections: bool,
    /// Noise specification JSON; overrides the individual noise flags.
    #[arg(long)]
    noise: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    drop_rate: f64,
    #[arg(long, default_value_t = 0.0)]
    fp_rate: f64,
    #[arg(long, default_value_t = 0.0)]
    center_sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    dim_sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    angle_sigma: f64,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// One or more manifests; a total row is added for several.
    #[arg(long = "manifest", required = true)]
    manifests: Vec<PathBuf>,
}

/// Runs the command line `argv` (program name first) and returns the exit
/// status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();

    let result = match cli.jobs {
        Some(0) => Err(invalid("--jobs must be at least 1")),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(invalid(e)),
        },
        None => dispatch(&cli),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Convert(a) => convert(a),
        Command::Transform(a) => transform(a),
        Command::Split(a) => split(a, cli.seed),
        Command::Eval(a) => eval(a),
        Command::Compare(a) => compare(a),
        Command::Synth(a) => synth(a, cli.seed),
        Command::Stats(a) => stats(a),
    }
}

fn convert(a: &ConvertArgs) -> Result<(), CliError> {
    let mapping = match &a.class_map {
        Some(p) => Some(ClassMapping::parse(&read(p)?).map_err(invalid)?),
        None => None,
    };
    if a.manifest {
        let mut m = parse_manifest(&read(&a.input)?).map_err(invalid)?;
        if let Some(map) = &mapping {
            let dropped = map.apply(&mut m);
            info!("class mapping dropped {dropped} annotations");
        }
        if a.output.extension().is_some_and(|e| e == "json") && a.to == LabelFormat::ManifestJson {
            return write(&a.output, &write_manifest(&m).map_err(invalid)?);
        }
        for f in &m.frames {
            let recs: Vec<LabelRecord> = f
                .annotations
                .iter()
                .cloned()
                .map(LabelRecord::from)
                .collect();
            let text = write_labels(&recs, a.to).map_err(invalid)?;
            write(
                &a.output.join(format!("{}.{}", f.frame_id, extension(a.to))),
                &text,
            )?;
        }
        info!("wrote {} label files", m.frames.len());
        return Ok(());
    }
    let convert_one = |path: &Path, frame_id: &str, out: &Path| -> Result<(), CliError> {
        let mut recs = parse_file(path, a.from.unwrap_or_else(|| guess_format(path)), frame_id)?;
        if let Some(map) = &mapping {
            recs.retain_mut(|r| match map.map(&r.annotation.class_name) {
                Some(c) => {
                    r.annotation.class_name = c.to_string();
                    true
                }
                None => false,
            });
        }
        write(out, &write_labels(&recs, a.to).map_err(invalid)?)
    };
    if a.input.is_dir() {
        let files = label_files(&a.input)?;
        files.par_iter().try_for_each(|(id, p)| {
            convert_one(p, id, &a.output.join(format!("{id}.{}", extension(a.to))))
        })?;
        info!("converted {} files", files.len());
        Ok(())
    } else {
        let id = a
            .input
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        convert_one(&a.input, &id, &a.output)
    }
}

fn transform(a: &TransformArgs) -> Result<(), CliError> {
    let calib = parse_calibration(&read(&a.calib)?).map_err(invalid)?;
    let t: RigidTransform = calib.transform(&a.from, &a.to).ok_or_else(|| {
        invalid(format!(
            "calibration has no transform between '{}' and '{}'",
            a.from, a.to
        ))
    })?;
    let camera_id = RigidTransform::identity("object", &a.to).map_err(invalid)?;
    let files = label_files(&a.labels)?;
    files.par_iter().try_for_each(|(id, p)| {
        let mut recs = parse_file(p, a.format, id)?;
        for r in &mut recs {
            let b = transform_box(&t, &a.from, &r.annotation.box3d).map_err(invalid)?;
            r.annotation.box3d = b;
            if a.project {
                let proj = project_box(&calib.intrinsics, &camera_id, &b);
                r.annotation.box2d = proj.rect;
                r.annotation.truncation = proj.truncation();
            }
        }
        let text = write_labels(&recs, a.format).map_err(invalid)?;
        write(&a.out.join(format!("{id}.{}", extension(a.format))), &text)
    })?;
    info!(
        "transformed {} files from '{}' to '{}'",
        files.len(),
        a.from,
        a.to
    );
    Ok(())
}

fn split(a: &SplitArgs, seed: u64) -> Result<(), CliError> {
    let m = parse_manifest(&read(&a.manifest)?).map_err(invalid)?;
    let spec = if a.stratify {
        make_stratified_split(&m, a.fraction, seed)
    } else {
        make_split(&m, a.fraction, seed)
    }
    .map_err(invalid)?;
    info!(
        "{} train / {} test frames",
        spec.count(crate::datasets::SplitRole::Train),
        spec.count(crate::datasets::SplitRole::Test)
    );
    emit(a.out.as_deref(), &spec.to_json())
}

fn eval(a: &EvalArgs) -> Result<(), CliError> {
    let mut m = parse_manifest(&read(&a.gt)?).map_err(invalid)?;
    m.validate().map_err(invalid)?;

    let calib_dir = a
        .calib_dir
        .clone()
        .unwrap_or_else(|| a.gt.parent().map(Path::to_path_buf).unwrap_or_default());
    let mut calib_cache = BTreeMap::new();
    for f in &mut m.frames {
        if f.annotations.iter().all(|x| x.box2d.is_some()) {
            continue;
        }
        if f.calibration_ref.is_empty() {
            return Err(invalid(format!(
                "frame '{}' has annotations without 2D boxes and no calibration_ref",
                f.frame_id
            )));
        }
        if !calib_cache.contains_key(&f.calibration_ref) {
            let path = calib_dir.join(&f.calibration_ref);
            let c = parse_calibration(&read(&path)?)
                .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            calib_cache.insert(f.calibration_ref.clone(), c);
        }
        fill_box2d(f, &calib_cache[&f.calibration_ref], false);
    }

    let files = label_files(&a.pred)?;
    let parsed: Vec<(String, Vec<LabelRecord>)> = files
        .par_iter()
        .map(|(id, p)| Ok((id.clone(), parse_file(p, guess_format(p), id)?)))
        .collect::<Result<_, CliError>>()?;
    let mut detections = BTreeMap::new();
    for (id, recs) in parsed {
        let dets = recs
            .into_iter()
            .map(|r| {
                r.into_detection()
                    .ok_or_else(|| invalid(format!("frame '{id}': detection without a score")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        detections.insert(id, dets);
    }
    debug!("loaded detections for {} frames", detections.len());

    let config = EvalConfig {
        iou_threshold: a.iou,
        class_thresholds: a.class_iou.iter().cloned().collect(),
        interpolation: a.interpolation,
        error_breakdown: a.breakdown,
    };
    let report = evaluate(&m, &detections, &config).map_err(invalid)?;

    let plan = match &a.plan {
        Some(p) => ExperimentPlan::from_json(&read(p)?).map_err(invalid)?,
        None => ExperimentPlan {
            pretrain: None,
            finetune_chain: Vec::new(),
            eval: DatasetRef::new(m.name.clone()),
            training_metadata: BTreeMap::new(),
        },
    };
    let mut text = render_report(&[(&plan, &report)]).map_err(invalid)?;
    text.push('\n');
    text.push_str(&report.summary());
    if let Some(b) = &report.breakdown {
        text.push_str(&format!(
            "\nerror breakdown over {} pairs: cls {:.4}, pos {:.4} m, dim {:.4} m, ori {:.4} rad\n",
            b.pairs, b.cls_error, b.pos_error, b.dim_error, b.ori_error
        ));
    }
    print!("{text}");
    if let Some(p) = &a.json {
        write(p, &report.to_json())?;
    }
    Ok(())
}

fn compare(a: &CompareArgs) -> Result<(), CliError> {
    let load = |p: &Path| EvalReport::from_json(&read(p)?).map_err(invalid);
    let cells = compare_reports(&load(&a.baseline)?, &load(&a.treatment)?).map_err(invalid)?;
    print!("{}", render_comparison(&cells));
    if let Some(p) = &a.json {
        let mut s = serde_json::to_string_pretty(&cells).map_err(invalid)?;
        s.push('\n');
        write(p, &s)?;
    }
    Ok(())
}

fn synth(a: &SynthArgs, seed: u64) -> Result<(), CliError> {
    let cfg: SceneConfig = match &a.config {
        Some(p) => serde_json::from_str(&read(p)?).map_err(invalid)?,
        None => SceneConfig::default(),
    };
    let noise: NoiseSpec = match &a.noise {
        Some(p) => serde_json::from_str(&read(p)?).map_err(invalid)?,
        None => NoiseSpec {
            drop_rate: a.drop_rate,
            fp_rate: a.fp_rate,
            center_sigma: a.center_sigma,
            dim_sigma: a.dim_sigma,
            angle_sigma: a.angle_sigma,
            ..NoiseSpec::none()
        },
    };
    noise.validate().map_err(invalid)?;
    let corpus = generate_corpus(&cfg, &a.name, a.frames, seed).map_err(invalid)?;
    write(
        &a.out.join("manifest.json"),
        &write_manifest(&corpus.manifest).map_err(invalid)?,
    )?;
    for (r, c) in &corpus.calibrations {
        write(&a.out.join(r), &write_calibration(c))?;
    }
    for f in &corpus.manifest.frames {
        let recs: Vec<LabelRecord> = f
            .annotations
            .iter()
            .cloned()
            .map(LabelRecord::from)
            .collect();
        write(
            &a.out.join("labels").join(format!("{}.txt", f.frame_id)),
            &write_kitti(&recs).map_err(invalid)?,
        )?;
    }
    if a.detections {
        // detections use a seed stream distinct from scene generation
        let dets = corrupt_corpus(&corpus, &cfg, &noise, seed.wrapping_add(1)).map_err(invalid)?;
        for (id, d) in &dets {
            let recs: Vec<LabelRecord> = d.iter().cloned().map(LabelRecord::from).collect();
            write(
                &a.out.join("detections").join(format!("{id}.txt")),
                &write_kitti(&recs).map_err(invalid)?,
            )?;
        }
    }
    info!("wrote {} frames to {}", a.frames, a.out.display());
    Ok(())
}

fn stats(a: &StatsArgs) -> Result<(), CliError> {
    let mut rows = Vec::new();
    let mut total = DatasetStats::default();
    for p in &a.manifests {
        let m = parse_manifest(&read(p)?).map_err(invalid)?;
        let s = dataset_stats(&m);
        total = total + s.clone();
        rows.push((m.name, s));
    }
    let mut out = String::from("| Dataset | Resolution | Images | 3D Boxes |\n|---|---|---|---|\n");
    for (name, s) in &rows {
        out.push_str(&s.table_row(name));
        out.push('\n');
    }
    if rows.len() > 1 {
        out.push_str(&total.table_row("Total"));
        out.push('\n');
    }
    for (name, s) in &rows {
        let classes: Vec<String> = s
            .per_class
            .iter()
            .map(|(c, n)| format!("{c}: {n}"))
            .collect();
        out.push_str(&format!("\n{name} classes: {}\n", classes.join(", ")));
    }
    print!("{out}");
    Ok(())
}
