//! Acceptance checks, one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines are always printed.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use laeo::annotate::{
    detect_laeo_pair, detection_metrics, synth_multiview, DetectorConfig, FrameStatus, MultiViewConfig, SubjectView,
    ViewEstimate,
};
use laeo::geometry::{backproject, project, CameraIntrinsics, Mat3, UnitVec3, Vec2, Vec3};
use laeo::losses::gradcheck::run_gradcheck;
use laeo::losses::{
    coefficients, combine, ramp, total_objective, ComponentParts, Exclusions, GazePrediction, Geom3dMode, GradKey,
    LaeoComponent, LaeoSample, LossOutput, LossWeights, ObjectiveInput, PairGeometry, PseudoMode, Quantity, Schedule,
};
use laeo::scene::{
    derive_seed, derived_gaze_label, eye_center_assumption_error, label_error_study, standard_ladder, synth_scene,
    LabelStudyConfig, SynthConfig,
};
use laeo::trainer::{
    ablation_setup, depth_noise_study, median, noise_study_medians, run_variant, study_setup, RunResult, SyntheticData,
};

const MASTER_SEED: u64 = 42;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn seeds(n: u64) -> Vec<u64> {
    (0..n).map(|k| derive_seed(MASTER_SEED, k)).collect()
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let rows = match run_gradcheck(500, MASTER_SEED, 1e-6) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("gradcheck error: {e}")),
    };
    let elapsed = start.elapsed();
    let worst = rows.iter().map(|r| r.max_rel_err).fold(0.0, f64::max);
    let all = rows.iter().all(|r| r.configs >= 500 && r.max_rel_err < 1e-6);
    let needed = [
        "aleatoric",
        "symmetry",
        "geom2d",
        "geom3d_plane",
        "geom3d_cosine",
        "pseudo_weighted",
        "pseudo_naive",
        "pseudo_confident",
        "total_objective",
    ];
    let covered = needed.iter().all(|n| rows.iter().any(|r| r.loss == *n));
    outcome(
        all && covered && elapsed < Duration::from_secs(10),
        format!("{} losses, worst rel err {worst:.2e}, {:.2}s", rows.len(), elapsed.as_secs_f64()),
    )
}

fn projection_identities() -> Outcome {
    let cam = CameraIntrinsics::new(1000.0, Vec2::new(960.0, 540.0), Vec2::new(1920.0, 1080.0)).unwrap();
    let anchor = backproject(Vec2::new(100.0, 50.0), 2000.0, &cam).unwrap();
    let anchor_ok = anchor == Vec3::new(200.0, 100.0, 2000.0);
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let p = Vec3::new(
            rng.random_range(-3000.0..3000.0),
            rng.random_range(-3000.0..3000.0),
            rng.random_range(100.0..20_000.0),
        );
        let cam = CameraIntrinsics { focal_px: rng.random_range(200.0..5000.0), ..cam };
        let q = project(p, &cam).unwrap();
        let back = backproject(q, p.z, &cam).unwrap();
        worst = worst.max((back - p).norm() / p.norm());
        let q2 = project(back, &cam).unwrap();
        worst = worst.max((q2 - q).norm() / q.norm().max(1.0));
    }
    outcome(anchor_ok && worst < 1e-9, format!("anchor {anchor:?}, worst roundtrip rel err {worst:.2e}"))
}

fn zero_loss_fixed_points() -> Outcome {
    let mut geos = Vec::new();
    let mut preds = Vec::new();
    for s in 0..64 {
        let pair = synth_scene(&SynthConfig::default(), derive_seed(MASTER_SEED, s)).unwrap();
        let (la, lb) = derived_gaze_label(&pair).unwrap();
        geos.push(PairGeometry::new(&pair).unwrap());
        preds.push((GazePrediction::new(la.pitch, la.yaw, 0.0), GazePrediction::new(lb.pitch, lb.yaw, 0.0)));
    }
    let laeo: Vec<LaeoSample> = geos
        .iter()
        .zip(&preds)
        .enumerate()
        .map(|(k, (g, &(a, b)))| LaeoSample { geometry: g, face_a: 2 * k, face_b: 2 * k + 1, pred_a: a, pred_b: b })
        .collect();
    // The aleatoric and symmetry terms are not stationary in log σ at zero
    // residual, so the objective here is the mutual-gaze part.
    let input = ObjectiveInput { laeo: &laeo, ..Default::default() };
    let mut worst_value: f64 = 0.0;
    let mut worst_grad: f64 = 0.0;
    for pseudo_mode in [PseudoMode::Weighted, PseudoMode::Naive, PseudoMode::Confident] {
        for geom3d_mode in [Geom3dMode::PlaneDistance, Geom3dMode::Cosine] {
            let weights = LossWeights { symmetry: false, pseudo_mode, geom3d_mode, ..Default::default() };
            let (out, bd) = match total_objective(10_000, &input, &weights, &Schedule::default()) {
                Ok(r) => r,
                Err(e) => return outcome(false, format!("objective error: {e}")),
            };
            for v in [bd.geom2d, bd.geom3d, bd.pseudo] {
                worst_value = worst_value.max(v.map_or(f64::INFINITY, f64::abs));
            }
            worst_grad = worst_grad.max(out.grad_norm());
        }
    }
    outcome(
        worst_value < 1e-9 && worst_grad < 1e-6,
        format!("64 exact pairs, max component {worst_value:.2e}, max gradient norm {worst_grad:.2e}"),
    )
}

fn degenerate_solutions() -> Outcome {
    let data = SyntheticData::default();
    let sets = [
        ("full", "geom3d,geom2d,pseudo,sym"),
        ("pseudo", "pseudo"),
        ("geom2d", "geom2d"),
        ("geom2d+pseudo", "geom2d,pseudo"),
        ("geom3d", "geom3d"),
        ("geom3d+pseudo", "geom3d,pseudo"),
        ("geom3d+geom2d", "geom3d,geom2d"),
        ("geom3d+geom2d+pseudo", "geom3d,geom2d,pseudo"),
    ];
    let mut errors: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut slowest = Duration::ZERO;
    for (name, losses) in sets {
        let config = ablation_setup(losses).unwrap();
        let start = Instant::now();
        for &seed in &seeds(5) {
            match run_variant(name, &data, &config, seed) {
                Ok(r) => errors.entry(name).or_default().push(r.error_deg()),
                Err(e) => return outcome(false, format!("{name}: {e}")),
            }
        }
        slowest = slowest.max(start.elapsed() / 5);
    }
    let max = |n: &str| errors[n].iter().cloned().fold(f64::MIN, f64::max);
    let min = |n: &str| errors[n].iter().cloned().fold(f64::MAX, f64::min);
    let full_ok = max("full") < 2.0;
    let collapsed = ["pseudo", "geom2d", "geom2d+pseudo"];
    let collapsed_ok = collapsed.iter().all(|n| min(n) >= 20.0);
    let geom3d_ok = errors.keys().filter(|n| n.starts_with("geom3d")).all(|n| max(n) < 5.0);
    // Every seed must rank the full set below the geom3d sets below the collapsed ones.
    let ordering_ok = (0..5).all(|k| {
        let worst_geom3d =
            errors.iter().filter(|(n, _)| n.starts_with("geom3d")).map(|(_, v)| v[k]).fold(0.0, f64::max);
        let best_collapsed = collapsed.iter().map(|n| errors[n][k]).fold(f64::MAX, f64::min);
        errors["full"][k] < best_collapsed && worst_geom3d < best_collapsed
    });
    let detail = errors.iter().map(|(n, v)| format!("{n} {:.2}", median(v))).collect::<Vec<_>>().join(", ");
    outcome(
        full_ok && collapsed_ok && geom3d_ok && ordering_ok && slowest < Duration::from_secs(120),
        format!("median error °: {detail}; slowest run {:.1}s", slowest.as_secs_f64()),
    )
}

fn study_runs(name: &str, pseudo: PseudoMode, geom3d: Geom3dMode) -> Result<Vec<RunResult>, String> {
    let (mut config, data) = study_setup();
    config.weights.pseudo_mode = pseudo;
    config.weights.geom3d_mode = geom3d;
    seeds(4).into_iter().map(|s| run_variant(name, &data, &config, s).map_err(|e| e.to_string())).collect()
}

fn variant_ordering() -> (Outcome, Outcome) {
    let variants = [
        ("weighted", PseudoMode::Weighted, Geom3dMode::PlaneDistance),
        ("confident", PseudoMode::Confident, Geom3dMode::PlaneDistance),
        ("naive", PseudoMode::Naive, Geom3dMode::PlaneDistance),
        ("cosine", PseudoMode::Weighted, Geom3dMode::Cosine),
    ];
    let mut runs = BTreeMap::new();
    for (name, p, g) in variants {
        match study_runs(name, p, g) {
            Ok(r) => {
                runs.insert(name, r);
            }
            Err(e) => {
                let fail = outcome(false, format!("{name}: {e}"));
                return (fail, outcome(false, "no weighted runs"));
            }
        }
    }
    let med = |n: &str| median(&runs[n].iter().map(RunResult::error_deg).collect::<Vec<_>>());
    let (w, c, n, cos) = (med("weighted"), med("confident"), med("naive"), med("cosine"));
    let checks = [("weighted ≤ confident", w <= c), ("weighted ≤ naive", w <= n), ("plane ≤ cosine", w <= cos)];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let c5 = outcome(
        failed.is_empty(),
        format!(
            "median error °: weighted {w:.3}, confident {c:.3}, naive {n:.3}, cosine {cos:.3}{}",
            if failed.is_empty() { String::new() } else { format!("; violated: {}", failed.join(", ")) }
        ),
    );
    let rho: Vec<f64> = runs["weighted"].iter().map(|r| r.spearman).collect();
    let c11 = outcome(
        runs["weighted"].iter().all(|r| r.spearman_defined && r.spearman > 0.0 && r.heldout_error_deg.is_some()),
        format!("held-out spearman per seed {rho:.3?}"),
    );
    (c5, c11)
}

fn depth_noise() -> Outcome {
    let (config, data) = study_setup();
    let sigmas = [0.1, 0.3, 0.5];
    let start = Instant::now();
    let rows = match depth_noise_study(&config, &data, &sigmas, &seeds(4)) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let elapsed = start.elapsed();
    let medians = noise_study_medians(&rows);
    let arm = |l2d: bool| -> Vec<f64> {
        sigmas.iter().map(|s| medians.iter().find(|m| m.0 == *s && m.1 == l2d).unwrap().2).collect()
    };
    let (with, without) = (arm(true), arm(false));
    let graceful = with.iter().zip(&without).all(|(a, b)| a <= b);
    let monotone = |v: &[f64]| v.windows(2).all(|w| w[0] <= w[1]);
    outcome(
        graceful && monotone(&with) && monotone(&without) && elapsed < Duration::from_secs(600),
        format!("with L2D {with:.2?}, without {without:.2?}, {:.0}s", elapsed.as_secs_f64()),
    )
}

fn label_ladder() -> Outcome {
    let config = LabelStudyConfig { seed: MASTER_SEED, ..Default::default() };
    let rows = match label_error_study(&config, &standard_ladder(MASTER_SEED)) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let errs: Vec<f64> = rows.iter().map(|r| r.mean_err_deg).collect();
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    let exact_zero = errs.last().is_some_and(|e| *e < 1e-6);
    let bound = eye_center_assumption_error(37.5, 500.0);
    outcome(
        decreasing && exact_zero && (bound - 4.29).abs() <= 0.01,
        format!("ladder {errs:.3?} °, eye-center bound {bound:.3}°"),
    )
}

fn view(id: usize, eyes: &[Vec3<f64>], gazes: &[Vec3<f64>]) -> ViewEstimate {
    ViewEstimate {
        view_id: format!("v{id}"),
        world_to_camera: Mat3::identity(),
        subjects: eyes
            .iter()
            .zip(gazes)
            .map(|(e, g)| {
                Some(SubjectView {
                    gaze: UnitVec3::normalize(*g).unwrap(),
                    eye_world: *e,
                    frontalness_rad: 80f64.to_radians(),
                    face_box: None,
                    body_box: None,
                })
            })
            .collect(),
    }
}

fn detector() -> Outcome {
    let config = DetectorConfig::default();
    let frames: Vec<_> =
        (0..500).map(|i| synth_multiview(&MultiViewConfig::default(), derive_seed(MASTER_SEED, i)).unwrap()).collect();
    let decisions: Vec<_> = frames.iter().map(|f| f.detect(&config).unwrap()).collect();
    let m = detection_metrics(&frames, &decisions);
    let clean_ok = m.frames == 500 && m.precision == 1.0 && m.recall == 1.0;

    let (a, b) = (Vec3::new(-500.0, 0.0, 3000.0), Vec3::new(500.0, 0.0, 3000.0));
    let (c, d) = (Vec3::new(-500.0, 0.0, 5000.0), Vec3::new(500.0, 0.0, 5000.0));
    let ab = Vec3::new(1.0, 0.0, 0.0);
    let two: Vec<_> = (0..5).map(|i| view(i, &[a, b, c, d], &[ab, -ab, ab, -ab])).collect();
    let multiple_ok = detect_laeo_pair(&two, 4, &config).unwrap().status == FrameStatus::DiscardedMultiple;

    // A looks 40° away from B in the views that should not pass.
    let away = Vec3::new(40f64.to_radians().cos(), 0.0, -40f64.to_radians().sin());
    let votes = |passing: usize| {
        let views: Vec<_> = (0..7).map(|i| view(i, &[a, b], &[if i < passing { ab } else { away }, -ab])).collect();
        detect_laeo_pair(&views, 2, &config).unwrap().status
    };
    let boundary_ok = votes(3) == FrameStatus::DiscardedNone && votes(4) == FrameStatus::Detected { a: 0, b: 1 };
    outcome(
        clean_ok && multiple_ok && boundary_ok,
        format!(
            "500 clean frames precision {} recall {}; two pairs discarded {multiple_ok}; 3/7 vs 4/7 boundary {boundary_ok}",
            m.precision, m.recall
        ),
    )
}

fn ramp_schedule() -> Outcome {
    let ramps_ok = ramp(1500, 3000) == 0.5 && ramp(3000, 3000) == 1.0 && ramp(0, 3000) == 0.0 && ramp(0, 2400) == 0.0;
    let unit = |face| LossOutput { value: 1.0, grads: [(GradKey::new(face, false, Quantity::Pitch), 1.0)].into() };
    let parts = ComponentParts {
        aleatoric: Some(unit(0)),
        symmetry: Some(unit(1)),
        laeo: [(LaeoComponent::Geom3d, unit(2))].into(),
        exclusions: Exclusions::default(),
    };
    let weights = LossWeights::default();
    let schedule = Schedule::default();
    let mut probes = Vec::new();
    let mut ok = ramps_ok;
    for i in [0, schedule.t_beta, 10 * schedule.t_beta] {
        let out = combine(&parts, coefficients(i, &weights, &schedule, false));
        let probed = [0, 1, 2].map(|f| out.grad(f, false, Quantity::Pitch));
        let expected = [1.0, weights.alpha * ramp(i, schedule.t_alpha), weights.beta * ramp(i, schedule.t_beta)];
        ok &= probed == expected;
        probes.push(probed);
    }
    ok &= probes[0] == [1.0, 0.0, 0.0];
    outcome(ok, format!("coefficients at i = 0, T_β, 10·T_β: {probes:?}"))
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn cli_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let bin = env!("CARGO_BIN_EXE_laeo");
    let short = root.join("short.toml");
    std::fs::write(&short, "iterations = 150\nseeds = 2\n").unwrap();
    let short = short.to_str().unwrap();
    let scenes = root.join("input/scenes.jsonl");
    let frames = root.join("input/frames.jsonl");
    let setup = [vec!["synth", "--n", "20", "--out"], vec!["detect", "--n", "10", "--out"]];
    for (args, name) in setup.iter().zip(["input", "frames"]) {
        let dir = root.join(name);
        let status = Command::new(bin).args(args).arg(&dir).output().unwrap().status;
        if !status.success() {
            return outcome(false, format!("{} setup failed", args[0]));
        }
    }
    std::fs::copy(root.join("frames/frames.jsonl"), &frames).unwrap();
    let (scenes, frames) = (scenes.to_str().unwrap(), frames.to_str().unwrap());
    let commands: Vec<Vec<&str>> = vec![
        vec!["synth", "--n", "20"],
        vec!["corrupt", "--input", scenes, "--sigma", "0.2"],
        vec!["labels", "--input", scenes],
        vec!["gradcheck", "--n", "20"],
        vec!["train", "--n", "20", "--config", short],
        vec!["train", "--input", scenes, "--config", short],
        vec!["ablate", "--n", "20", "--losses", "geom3d,geom2d,pseudo,sym", "--losses", "pseudo", "--config", short],
        vec!["noise-study", "--n", "20", "--sigma", "0,0.3", "--config", short],
        vec!["label-study", "--n", "50"],
        vec!["detect", "--n", "20"],
        vec!["detect", "--input", frames],
    ];
    let mut differing = Vec::new();
    for (k, args) in commands.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let dir = root.join(format!("run{k}_{rep}"));
            let out = Command::new(bin).args(args).args(["--seed", "7", "--out"]).arg(&dir).output().unwrap();
            if !out.status.success() {
                return outcome(
                    false,
                    format!("{args:?} exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)),
                );
            }
            outputs.push(files(&dir));
        }
        if outputs[0] != outputs[1] || outputs[0].is_empty() {
            differing.push(args.join(" "));
        }
    }
    outcome(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} command lines rerun, all outputs byte-identical", commands.len())
        } else {
            format!("outputs differ for: {}", differing.join("; "))
        },
    )
}

fn main() {
    let start = Instant::now();
    let mut results: BTreeMap<u32, Outcome> = BTreeMap::new();
    results.insert(1, gradient_correctness());
    results.insert(2, projection_identities());
    results.insert(3, zero_loss_fixed_points());
    results.insert(4, degenerate_solutions());
    let (c5, c11) = variant_ordering();
    results.insert(5, c5);
    results.insert(6, depth_noise());
    results.insert(7, label_ladder());
    results.insert(8, detector());
    results.insert(9, ramp_schedule());
    results.insert(10, cli_determinism());
    results.insert(11, c11);
    for (k, o) in &results {
        println!("criterion {k:>2}: {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    let failed: Vec<u32> = results.iter().filter(|(_, o)| !o.pass).map(|(k, _)| *k).collect();
    println!(
        "acceptance: {}/{} criteria pass in {:.0}s",
        results.len() - failed.len(),
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
