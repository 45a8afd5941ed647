use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use laeo::annotate::io::{read_frames, write_frames};
use laeo::annotate::{detection_metrics, synth_multiview, MultiViewFrame};
use laeo::geometry::camera_to_normalized;
use laeo::losses::gradcheck::run_gradcheck;
use laeo::scene::io::{load_dataset, write_dataset};
use laeo::scene::{
    corrupt as corrupt_pair, derive_seed, derived_gaze_label, eye_center_assumption_error, label_error_study,
    standard_ladder, LabelStudyConfig, SceneDataset,
};
use laeo::trainer::{
    ablation_setup, angular_error_deg, depth_noise_study, median, noise_study_medians, run_training, run_variant,
    study_setup, synthetic_pairs, SyntheticData, TrainSet,
};

use crate::output::OutDir;
use crate::settings::{
    resolve, CorruptSettings, DetectSettings, GradcheckSettings, LabelStudySettings, SynthSettings, TrainSettings,
};
use crate::{CliError, Common, LossFlags};

fn load(path: &Path) -> Result<SceneDataset, CliError> {
    let loaded = load_dataset(path)?;
    for w in &loaded.warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(loaded.dataset)
}

fn write_scenes(out: &mut OutDir, dataset: &SceneDataset) -> Result<(), CliError> {
    out.write("scenes.jsonl", |w| Ok(write_dataset(dataset, w)?))
}

pub fn synth(common: &Common, n: Option<usize>) -> Result<(), CliError> {
    let mut settings = resolve(SynthSettings::default(), common.config.as_deref())?;
    if let Some(n) = n {
        settings.n = n;
    }
    let pairs = synthetic_pairs(&settings.synth_config(), settings.n, common.seed)?;
    let mut out = OutDir::create(&common.out)?;
    write_scenes(&mut out, &SceneDataset::from_pairs(pairs))?;
    println!("wrote {} scenes to {}", settings.n, out.path("scenes.jsonl").display());
    out.finish("synth", common.seed, &[], &settings)
}

pub fn corrupt(common: &Common, input: &Path, sigma: Option<f64>) -> Result<(), CliError> {
    let mut settings = resolve(CorruptSettings::default(), common.config.as_deref())?;
    if let Some(s) = sigma {
        settings.depth_rel_sigma = s;
    }
    let noise = settings.noise_model(common.seed)?;
    let mut dataset = load(input)?;
    dataset.pairs = dataset.pairs.iter().map(|p| corrupt_pair(p, &noise)).collect::<Result<_, _>>()?;
    dataset.provenance = Some(noise);
    let mut out = OutDir::create(&common.out)?;
    write_scenes(&mut out, &dataset)?;
    println!("corrupted {} scenes", dataset.pairs.len());
    out.finish("corrupt", common.seed, &[input], &settings)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoSettings {}

#[derive(Serialize)]
struct LabelRow<'a> {
    frame_id: &'a str,
    subject: &'a str,
    pitch: f64,
    yaw: f64,
    truth_pitch: Option<f64>,
    truth_yaw: Option<f64>,
    error_deg: Option<f64>,
}

pub fn labels(common: &Common, input: &Path) -> Result<(), CliError> {
    let settings = resolve(NoSettings {}, common.config.as_deref())?;
    let dataset = load(input)?;
    let mut rows = Vec::new();
    for pair in &dataset.pairs {
        let (la, lb) = derived_gaze_label(pair)?;
        for (tag, s, label) in [("a", &pair.subject_a, la), ("b", &pair.subject_b, lb)] {
            let truth = s
                .gt_direction()
                .map(|g| camera_to_normalized(s.cyclopean_3d, g))
                .transpose()
                .map_err(|e| CliError::Invalid(format!("{}: {e}", pair.frame_id)))?;
            rows.push(LabelRow {
                frame_id: &pair.frame_id,
                subject: tag,
                pitch: label.pitch,
                yaw: label.yaw,
                truth_pitch: truth.map(|t| t.pitch),
                truth_yaw: truth.map(|t| t.yaw),
                error_deg: truth.map(|t| angular_error_deg(label, t)),
            });
        }
    }
    let mut out = OutDir::create(&common.out)?;
    out.csv("labels.csv", &rows)?;
    println!("derived {} labels", rows.len());
    out.finish("labels", common.seed, &[input], &settings)
}

#[derive(Serialize)]
struct GradcheckOut {
    loss: &'static str,
    configs: usize,
    max_rel_err: f64,
    pass: bool,
}

pub fn gradcheck(common: &Common, n: Option<usize>) -> Result<(), CliError> {
    let mut settings = resolve(GradcheckSettings::default(), common.config.as_deref())?;
    if let Some(n) = n {
        settings.n = n;
    }
    if settings.n == 0 || !(settings.step > 0.0) {
        return Err(CliError::Invalid("gradcheck needs n > 0 and step > 0".into()));
    }
    let rows: Vec<GradcheckOut> = run_gradcheck(settings.n, common.seed, settings.step)?
        .into_iter()
        .map(|r| GradcheckOut {
            loss: r.loss,
            configs: r.configs,
            max_rel_err: r.max_rel_err,
            pass: r.max_rel_err < settings.tolerance,
        })
        .collect();
    let mut out = OutDir::create(&common.out)?;
    out.csv("gradcheck.csv", &rows)?;
    for r in &rows {
        println!("{:<22} {:>10.3e} {}", r.loss, r.max_rel_err, if r.pass { "ok" } else { "FAIL" });
    }
    out.finish("gradcheck", common.seed, &[], &settings)?;
    let failed: Vec<&str> = rows.iter().filter(|r| !r.pass).map(|r| r.loss).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("gradient check failed for {}", failed.join(", "))))
    }
}

fn apply_flags(settings: &mut TrainSettings, n: Option<usize>, losses: Option<String>, modes: &LossFlags) {
    if let Some(n) = n {
        settings.n_train = n;
    }
    if let Some(l) = losses {
        settings.losses = l;
    }
    if let Some(m) = &modes.pseudo_mode {
        settings.pseudo_mode = m.clone();
    }
    if let Some(m) = &modes.geom3d_mode {
        settings.geom3d_mode = m.clone();
    }
}

#[derive(Serialize)]
struct ParamsOut<'a> {
    mode: laeo::trainer::PredictorMode,
    input_width: usize,
    values: &'a [f64],
}

pub fn train(
    common: &Common,
    input: Option<&Path>,
    n: Option<usize>,
    losses: Option<String>,
    modes: &LossFlags,
) -> Result<(), CliError> {
    let (config, data) = study_setup();
    let preset = TrainSettings::from_parts(&config, &data, 1);
    let mut settings = resolve(preset, common.config.as_deref())?;
    apply_flags(&mut settings, n, losses, modes);
    let config = settings.train_config(common.seed)?;
    let (train_set, heldout) = match input {
        Some(path) => (TrainSet::from_dataset(&load(path)?, &config.cue_noise, common.seed)?, None),
        None => {
            let split = settings.data().build(&config, common.seed)?;
            let heldout = (!split.heldout.faces.is_empty()).then_some(split.heldout);
            (split.train, heldout)
        }
    };
    let trained = run_training(&train_set, heldout.as_ref(), &config)?;
    let report = &trained.report;
    let mut out = OutDir::create(&common.out)?;
    out.write("history.csv", |w| report.write_history_csv(w).map_err(CliError::from))?;
    out.write("summary.json", |w| report.write_summary_json(w).map_err(|e| CliError::Invalid(e.to_string())))?;
    let p = &trained.params;
    out.json("params.json", &ParamsOut { mode: p.mode, input_width: p.input_width, values: &p.values })?;
    let s = &report.summary;
    println!(
        "final error {:.3}° (train {:.3}°), spearman {:.3}",
        report.final_error_deg(),
        s.train.mean_error_deg,
        s.heldout.as_ref().unwrap_or(&s.train).spearman
    );
    let inputs: Vec<&Path> = input.into_iter().collect();
    out.finish("train", common.seed, &inputs, &settings)
}

/// Loss sets of the default ablation, one per row of the comparison.
pub const DEFAULT_LOSS_SETS: [&str; 8] = [
    "pseudo",
    "geom2d",
    "geom2d,pseudo",
    "geom3d",
    "geom3d,pseudo",
    "geom3d,geom2d",
    "geom3d,geom2d,pseudo",
    "geom3d,geom2d,pseudo,sym",
];

#[derive(Serialize)]
struct StudySettings<'a> {
    #[serde(flatten)]
    train: &'a TrainSettings,
    loss_sets: Option<&'a [String]>,
    sigmas: Option<&'a [f64]>,
    run_seeds: Vec<u64>,
}

#[derive(Serialize)]
struct AblationRow<'a> {
    losses: &'a str,
    pseudo_mode: &'a str,
    geom3d_mode: &'a str,
    seed: u64,
    train_error_deg: f64,
    heldout_error_deg: Option<f64>,
    spearman: f64,
    spearman_defined: bool,
}

#[derive(Serialize)]
struct MedianRow<'a> {
    losses: &'a str,
    runs: usize,
    median_error_deg: f64,
}

fn run_seeds(master: u64, n: u64) -> Vec<u64> {
    (0..n).map(|k| derive_seed(master, k)).collect()
}

pub fn ablate(common: &Common, n: Option<usize>, losses: Vec<String>, modes: &LossFlags) -> Result<(), CliError> {
    let preset = TrainSettings::from_parts(&ablation_setup("geom3d,geom2d,pseudo,sym")?, &SyntheticData::default(), 5);
    let mut settings = resolve(preset, common.config.as_deref())?;
    apply_flags(&mut settings, n, None, modes);
    let sets: Vec<String> =
        if losses.is_empty() { DEFAULT_LOSS_SETS.iter().map(|s| s.to_string()).collect() } else { losses };
    let seeds = run_seeds(common.seed, settings.seeds);
    let data = settings.data();
    let mut rows = Vec::new();
    let mut medians = Vec::new();
    for set in &sets {
        let mut s = settings.clone();
        s.losses = set.clone();
        let config = s.train_config(common.seed)?;
        let mut errors = Vec::new();
        for &seed in &seeds {
            let r = run_variant(set, &data, &config, seed)?;
            errors.push(r.error_deg());
            rows.push(AblationRow {
                losses: set,
                pseudo_mode: &settings.pseudo_mode,
                geom3d_mode: &settings.geom3d_mode,
                seed,
                train_error_deg: r.train_error_deg,
                heldout_error_deg: r.heldout_error_deg,
                spearman: r.spearman,
                spearman_defined: r.spearman_defined,
            });
        }
        let m = median(&errors);
        println!("{set:<28} median error {m:.3}°");
        medians.push(MedianRow { losses: set, runs: errors.len(), median_error_deg: m });
    }
    let mut out = OutDir::create(&common.out)?;
    out.csv("ablation.csv", &rows)?;
    out.csv("ablation_medians.csv", &medians)?;
    let echo = StudySettings { train: &settings, loss_sets: Some(&sets), sigmas: None, run_seeds: seeds.clone() };
    out.finish("ablate", common.seed, &[], &echo)
}

#[derive(Serialize)]
struct NoiseMedianRow {
    sigma: f64,
    with_l2d: bool,
    median_error_deg: f64,
}

pub fn noise_study(
    common: &Common,
    n: Option<usize>,
    sigmas: Vec<f64>,
    losses: Option<String>,
    modes: &LossFlags,
) -> Result<(), CliError> {
    let (config, data) = study_setup();
    let preset = TrainSettings::from_parts(&config, &data, 4);
    let mut settings = resolve(preset, common.config.as_deref())?;
    apply_flags(&mut settings, n, losses, modes);
    let sigmas = if sigmas.is_empty() { vec![0.1, 0.3, 0.5] } else { sigmas };
    if let Some(bad) = sigmas.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
        return Err(CliError::Invalid(format!("depth noise level {bad} must be ≥ 0")));
    }
    let config = settings.train_config(common.seed)?;
    let seeds = run_seeds(common.seed, settings.seeds);
    let rows = depth_noise_study(&config, &settings.data(), &sigmas, &seeds)?;
    let medians: Vec<NoiseMedianRow> = noise_study_medians(&rows)
        .into_iter()
        .map(|(sigma, with_l2d, median_error_deg)| NoiseMedianRow { sigma, with_l2d, median_error_deg })
        .collect();
    for m in &medians {
        println!("sigma {:<5} l2d {:<5} median error {:.3}°", m.sigma, m.with_l2d, m.median_error_deg);
    }
    let mut out = OutDir::create(&common.out)?;
    out.csv("noise_study.csv", &rows)?;
    out.csv("noise_medians.csv", &medians)?;
    let echo = StudySettings { train: &settings, loss_sets: None, sigmas: Some(&sigmas), run_seeds: seeds.clone() };
    out.finish("noise-study", common.seed, &[], &echo)
}

#[derive(Serialize)]
struct LabelStudyOut {
    rung: String,
    mean_err_deg: f64,
    std_err_deg: f64,
    mean_rel_dz: f64,
}

pub fn label_study(common: &Common, n: Option<usize>) -> Result<(), CliError> {
    let mut settings = resolve(LabelStudySettings::default(), common.config.as_deref())?;
    if let Some(n) = n {
        settings.n_scenes = n;
    }
    let mut ladder = standard_ladder(common.seed);
    let last = ladder.len() - 1;
    for rung in &mut ladder[..last] {
        rung.depth_rel_sigma = settings.depth_rel_sigma;
        if rung.eye2d_sigma_px > 0.0 {
            rung.eye2d_sigma_px = settings.eye2d_sigma_px;
        }
    }
    let config = LabelStudyConfig { n_scenes: settings.n_scenes, seed: common.seed, ..Default::default() };
    let rows: Vec<LabelStudyOut> = label_error_study(&config, &ladder)?
        .into_iter()
        .map(|r| LabelStudyOut {
            rung: r.rung,
            mean_err_deg: r.mean_err_deg,
            std_err_deg: r.std_err_deg,
            mean_rel_dz: r.mean_rel_dz,
        })
        .collect();
    for r in &rows {
        println!("{:<60} {:.3}°", r.rung, r.mean_err_deg);
    }
    let bound = eye_center_assumption_error(settings.bound_offset_mm, settings.bound_separation_mm);
    let mut out = OutDir::create(&common.out)?;
    out.csv("label_study.csv", &rows)?;
    out.json(
        "eye_center_bound.json",
        &serde_json::json!({
            "target_offset_mm": settings.bound_offset_mm,
            "separation_mm": settings.bound_separation_mm,
            "error_deg": bound,
        }),
    )?;
    out.finish("label-study", common.seed, &[], &settings)
}

#[derive(Serialize)]
struct DecisionRow<'a> {
    frame_id: &'a str,
    status: &'static str,
    a: Option<usize>,
    b: Option<usize>,
    truth_a: Option<usize>,
    truth_b: Option<usize>,
    pairs_passing: usize,
}

pub fn detect(
    common: &Common,
    input: Option<&Path>,
    n: Option<usize>,
    min_views: Option<usize>,
    threshold_deg: Option<f64>,
) -> Result<(), CliError> {
    let mut settings = resolve(DetectSettings::default(), common.config.as_deref())?;
    if let Some(n) = n {
        settings.n_frames = n;
    }
    if let Some(m) = min_views {
        settings.min_views = m;
    }
    if let Some(t) = threshold_deg {
        settings.threshold_deg = t;
    }
    let detector = settings.detector();
    detector.validate()?;
    let mut out = OutDir::create(&common.out)?;
    let frames: Vec<MultiViewFrame> = match input {
        Some(path) => {
            let file = std::fs::File::open(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
            read_frames(std::io::BufReader::new(file))?
        }
        None => {
            let config = settings.multiview();
            config.validate()?;
            let frames = (0..settings.n_frames as u64)
                .map(|i| synth_multiview(&config, derive_seed(common.seed, i)))
                .collect::<Result<Vec<_>, _>>()?;
            out.write("frames.jsonl", |w| Ok(write_frames(&frames, w)?))?;
            frames
        }
    };
    let decisions = frames.iter().map(|f| f.detect(&detector)).collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<DecisionRow> = frames
        .iter()
        .zip(&decisions)
        .map(|(f, d)| DecisionRow {
            frame_id: &f.frame_id,
            status: d.status.name(),
            a: d.status.pair().map(|p| p.0),
            b: d.status.pair().map(|p| p.1),
            truth_a: f.truth.map(|p| p.0),
            truth_b: f.truth.map(|p| p.1),
            pairs_passing: d.votes.iter().filter(|v| v.laeo).count(),
        })
        .collect();
    out.csv("decisions.csv", &rows)?;
    let m = detection_metrics(&frames, &decisions);
    let metrics = serde_json::json!({
        "frames": m.frames,
        "detected": m.detected,
        "true_positives": m.true_positives,
        "discarded_none": m.discarded_none,
        "discarded_multiple": m.discarded_multiple,
        "precision": m.precision,
        "recall": m.recall,
    });
    out.json("metrics.json", &metrics)?;
    println!("{} frames: precision {:.4}, recall {:.4}", m.frames, m.precision, m.recall);
    let inputs: Vec<&Path> = input.into_iter().collect();
    out.finish("detect", common.seed, &inputs, &settings)?;
    std::io::stdout().flush().map_err(|e| CliError::Invalid(e.to_string()))
}
