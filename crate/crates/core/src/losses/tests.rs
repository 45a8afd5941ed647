use std::f64::consts::PI;

use proptest::prelude::*;

use super::gradcheck::run_gradcheck;
use super::*;
use crate::geometry::{camera_to_normalized, project};
use crate::scene::{derived_gaze_label, synth_scene, SubjectObservation, SynthConfig};

const SYNTH: fn() -> SynthConfig = SynthConfig::default;

fn truth(seed: u64) -> (PairGeometry, GazePrediction, GazePrediction) {
    let pair = synth_scene(&SYNTH(), seed).unwrap();
    let (la, lb) = derived_gaze_label(&pair).unwrap();
    let geo = PairGeometry::new(&pair).unwrap();
    (geo, GazePrediction::new(la.pitch, la.yaw, 0.0), GazePrediction::new(lb.pitch, lb.yaw, 0.0))
}

/// Subjects at `a` and `b` with the given headings.
fn hand_pair(a: Vec3<f64>, ha: Vec3<f64>, b: Vec3<f64>, hb: Vec3<f64>) -> LaeoPair {
    let camera = SYNTH().camera();
    let make = |p: Vec3<f64>, h: Vec3<f64>| {
        let q = project(p, &camera).unwrap();
        let d = Vec2::new(12.0, 0.0);
        let b = crate::scene::Box2::from_center(q, 60.0, 70.0);
        SubjectObservation::new(q - d, q + d, p.z, UnitVec3::normalize(h).unwrap(), b, b, None, &camera).unwrap()
    };
    LaeoPair { subject_a: make(a, ha), subject_b: make(b, hb), camera, frame_id: "hand".into() }
}

/// A's eye at (−500, 0, 3000) and B's at (500, 0, 3000), facing each other.
fn side_by_side() -> (LaeoPair, PairGeometry) {
    let pair = hand_pair(
        Vec3::new(-500.0, 0.0, 3000.0),
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(500.0, 0.0, 3000.0),
        Vec3::new(-1.0, 0.0, 0.0),
    );
    let geo = PairGeometry::new(&pair).unwrap();
    (pair, geo)
}

/// Prediction for subject `i` that looks along camera-frame `dir`.
fn looking(geo: &PairGeometry, i: usize, dir: Vec3<f64>) -> GazePrediction {
    let g = camera_to_normalized(geo.subjects[i].eye3d, UnitVec3::normalize(dir).unwrap()).unwrap();
    GazePrediction::new(g.pitch, g.yaw, 0.0)
}

// aleatoric

#[test]
fn aleatoric_examples() {
    let gt = GazeAngles::new(0.2, -0.4);
    assert_eq!(aleatoric_loss(GazePrediction::new(0.2, -0.4, 0.0), gt).value, 0.0);
    let v = aleatoric_loss(GazePrediction::new(1.2, 0.6, 0.0), gt).value;
    assert!((v - 2.0).abs() < 1e-15);
    let v = aleatoric_loss(GazePrediction::new(0.2, -0.4, 1.0), gt).value;
    assert_eq!(v, 2.0);
}

#[test]
fn aleatoric_analytic_matches_dual() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    runner
        .run(&(-1.5..1.5f64, -3.0..3.0f64, -2.0..2.0f64, -1.5..1.5f64, -3.0..3.0f64), |(p, y, s, gp, gy)| {
            let pred = GazePrediction::new(p, y, s);
            let gt = GazeAngles::new(gp, gy);
            let a = aleatoric_loss(pred, gt);
            let d = aleatoric_loss_dual(pred, gt).unwrap();
            prop_assert!((a.value - d.value).abs() <= 1e-12 * a.value.abs().max(1.0));
            prop_assert_eq!(a.grads.len(), d.grads.len());
            for (k, g) in &a.grads {
                prop_assert!((g - d.grads[k]).abs() <= 1e-12 * g.abs().max(1.0));
            }
            Ok(())
        })
        .unwrap();
}

#[test]
fn aleatoric_kink_uses_zero_sign() {
    let out = aleatoric_loss(GazePrediction::new(0.3, 0.1, 0.0), GazeAngles::new(0.3, 0.1));
    assert_eq!(out.grad(0, false, Quantity::Pitch), 0.0);
    assert_eq!(out.grad(0, false, Quantity::LogSigma), 2.0);
}

// symmetry

#[test]
fn symmetry_examples() {
    let o = GazePrediction::new(0.1, 0.4, 0.0);
    let exact = GazePrediction::new(0.1, -0.4, 0.0);
    assert_eq!(symmetry_loss(o, exact).unwrap().value, 0.0);
    // yaw not flipped: each direction costs |φ − (−φ)| = 2|φ|
    let same = GazePrediction::new(0.1, 0.4, 0.0);
    assert!((symmetry_loss(o, same).unwrap().value - 0.8).abs() < 1e-15);
}

#[test]
fn symmetry_targets_are_detached() {
    let o = GazePrediction::new(0.3, 0.2, 0.4);
    let m = GazePrediction::new(0.1, 0.5, -0.7);
    let out = symmetry_loss(o, m).unwrap();
    // only the half where the original is the regressor reaches it
    let so = (-0.4f64).exp();
    let sm = (0.7f64).exp();
    assert!((out.grad(0, false, Quantity::Pitch) - 0.5 * so).abs() < 1e-15);
    assert!((out.grad(0, false, Quantity::Yaw) - 0.5 * so).abs() < 1e-15);
    assert!((out.grad(0, true, Quantity::Pitch) + 0.5 * sm).abs() < 1e-15);
    assert!((out.grad(0, true, Quantity::Yaw) - 0.5 * sm).abs() < 1e-15);
    assert_eq!(out.grads.len(), 6);
}

// geom2d

#[test]
fn geom2d_examples() {
    let (_, geo) = side_by_side();
    let exact_a = looking(&geo, 0, Vec3::new(1.0, 0.0, 0.0));
    let exact_b = looking(&geo, 1, Vec3::new(-1.0, 0.0, 0.0));
    assert!(geom2d_loss(&geo, exact_a, exact_b).unwrap().value.abs() < 1e-12);
    let down = looking(&geo, 0, Vec3::new(0.0, 1.0, 0.0));
    assert!((geom2d_loss(&geo, down, exact_b).unwrap().value - 0.5).abs() < 1e-12);
    let away_a = looking(&geo, 0, Vec3::new(-1.0, 0.0, 0.0));
    let away_b = looking(&geo, 1, Vec3::new(1.0, 0.0, 0.0));
    assert!((geom2d_loss(&geo, away_a, away_b).unwrap().value - 2.0).abs() < 1e-12);
}

#[test]
fn geom2d_rejects_gaze_along_the_camera_ray() {
    let (geo, _, _) = truth(3);
    let zero = GazePrediction::new(0.0, 0.0, 0.0);
    assert!(matches!(geom2d_loss(&geo, zero, zero), Err(LossError::Geometry(GeometryError::Degenerate))));
}

#[test]
fn geom2d_is_blind_to_common_depth_scale_but_geom3d_is_not() {
    for seed in 0..50 {
        let pair = synth_scene(&SYNTH(), seed).unwrap();
        let geo = PairGeometry::new(&pair).unwrap();
        let (la, lb) = derived_gaze_label(&pair).unwrap();
        let a = GazePrediction::new(la.pitch + 0.2, la.yaw - 0.1, 0.0);
        let b = GazePrediction::new(lb.pitch - 0.1, lb.yaw + 0.3, 0.0);
        let base2 = geom2d_loss(&geo, a, b).unwrap().value;
        let base3 = geom3d_loss(&geo, a, b, Geom3dScale::Separation).unwrap().value;

        let rescale = |ka: f64, kb: f64| {
            let mut p = pair.clone();
            p.subject_a.depth_mm *= ka;
            p.subject_b.depth_mm *= kb;
            p.subject_a.rederive(&p.camera).unwrap();
            p.subject_b.rederive(&p.camera).unwrap();
            PairGeometry::new(&p).unwrap()
        };
        let common = rescale(1.7, 1.7);
        let v = geom2d_loss(&common, a, b).unwrap().value;
        assert!((v - base2).abs() < 1e-12, "{v} vs {base2}");

        let skew = rescale(1.0, 1.4);
        let v3 = geom3d_loss(&skew, a, b, Geom3dScale::Separation).unwrap().value;
        assert!((v3 - base3).abs() > 1e-6, "{v3} vs {base3}");
    }
}

// geom3d

#[test]
fn geom3d_examples() {
    let (_, geo) = side_by_side();
    let exact_a = looking(&geo, 0, Vec3::new(1.0, 0.0, 0.0));
    let exact_b = looking(&geo, 1, Vec3::new(-1.0, 0.0, 0.0));
    let v = geom3d_loss(&geo, exact_a, exact_b, Geom3dScale::Separation).unwrap().value;
    assert!(v < 1e-12);

    // off by α within B's face plane: hit offset 1000·tan α over 1000 mm
    for alpha in [0.05f64, 0.2, 0.6] {
        let off = looking(&geo, 0, Vec3::new(alpha.cos(), alpha.sin(), 0.0));
        let v = geom3d_loss(&geo, off, exact_b, Geom3dScale::Separation).unwrap().value;
        assert!((v - alpha.tan() / 2.0).abs() < 1e-12, "{v}");
        let raw = geom3d_loss(&geo, off, exact_b, Geom3dScale::RawMm).unwrap().value;
        assert!((raw - 1000.0 * alpha.tan() / 2.0).abs() < 1e-9, "{raw}");
    }
}

#[test]
fn geom3d_parallel_ray_falls_back_to_ray_distance() {
    let pair = hand_pair(
        Vec3::new(-500.0, 0.0, 3000.0),
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(500.0, 0.0, 3000.0),
        Vec3::new(-1.0, 0.0, 0.3),
    );
    let geo = PairGeometry::new(&pair).unwrap();
    let exact_b = looking(&geo, 1, Vec3::new(-1.0, 0.0, 0.0));
    // inside B's face plane, so parallel to it
    let g = Vec3::new(0.3, 0.0, 1.0);
    let a = looking(&geo, 0, g);
    let v = geom3d_loss(&geo, a, exact_b, Geom3dScale::Separation).unwrap().value;
    let w = geo.subjects[1].eye3d - geo.subjects[0].eye3d;
    let unit = g.scale(1.0 / g.norm());
    let ray_distance = w.cross(unit).norm();
    let exact_b_term = geom3d_loss(&geo, looking(&geo, 0, w), exact_b, Geom3dScale::Separation).unwrap().value;
    assert!(exact_b_term < 1e-12);
    assert!(v.is_finite());
    assert!((v - ray_distance / 1000.0 / 2.0).abs() < 1e-9, "{v}");
}

#[test]
fn geom3d_looking_away_still_has_gradient() {
    let (_, geo) = side_by_side();
    let exact_b = looking(&geo, 1, Vec3::new(-1.0, 0.0, 0.0));
    let away = looking(&geo, 0, Vec3::new(-1.0, 0.2, 0.1));
    let out = geom3d_loss(&geo, away, exact_b, Geom3dScale::Separation).unwrap();
    assert!(out.value.is_finite() && out.value > 0.5);
    assert!(out.grad(0, false, Quantity::Pitch).abs() + out.grad(0, false, Quantity::Yaw).abs() > 0.0);
}

#[test]
fn geom3d_cosine_examples() {
    let (_, geo) = side_by_side();
    let exact_a = looking(&geo, 0, Vec3::new(1.0, 0.0, 0.0));
    let exact_b = looking(&geo, 1, Vec3::new(-1.0, 0.0, 0.0));
    assert!(geom3d_cosine_variant(&geo, exact_a, exact_b).unwrap().value.abs() < 1e-12);
    let anti_a = looking(&geo, 0, Vec3::new(-1.0, 0.0, 0.0));
    let anti_b = looking(&geo, 1, Vec3::new(1.0, 0.0, 0.0));
    assert!((geom3d_cosine_variant(&geo, anti_a, anti_b).unwrap().value - 2.0).abs() < 1e-12);
    let t = PI / 3.0;
    let a60 = looking(&geo, 0, Vec3::new(t.cos(), t.sin(), 0.0));
    let b60 = looking(&geo, 1, Vec3::new(-t.cos(), 0.0, t.sin()));
    assert!((geom3d_cosine_variant(&geo, a60, b60).unwrap().value - 0.5).abs() < 1e-12);
}

// pseudo

#[test]
fn pseudo_weight_examples() {
    assert_eq!(pseudo_weights(2.0, 2.0), (0.5, 0.5));
    assert_eq!(pseudo_weights(1.0, 3.0), (0.75, 0.25));
    let (a, b) = pseudo_weights(0.3, 1.1);
    let (c, d) = pseudo_weights(0.3 * 7.0, 1.1 * 7.0);
    assert!((a - c).abs() < 1e-15 && (b - d).abs() < 1e-15);
    assert!((a + b - 1.0).abs() < 1e-15);
}

#[test]
fn consistent_predictions_cost_nothing() {
    for seed in 0..20 {
        let (geo, a, b) = truth(seed);
        for mode in [PseudoMode::Weighted, PseudoMode::Naive, PseudoMode::Confident] {
            assert!(pseudo_gaze_loss(&geo, a, b, mode).unwrap().value.abs() < 1e-9);
        }
    }
}

#[test]
fn weighted_target_is_the_bisector() {
    let (_, geo) = side_by_side();
    for delta in [0.05f64, 0.3, 0.9] {
        // ĝ_A and −ĝ_B are δ either side of the eye line
        let a = looking(&geo, 0, Vec3::new(delta.cos(), delta.sin(), 0.0));
        let b = looking(&geo, 1, Vec3::new(-delta.cos(), delta.sin(), 0.0));
        let v = pseudo_gaze_loss(&geo, a, b, PseudoMode::Weighted).unwrap().value;
        assert!((v - (1.0 - delta.cos())).abs() < 1e-12, "{v}");
    }
}

#[test]
fn exactly_opposed_predictions_are_excluded() {
    let (_, geo) = side_by_side();
    let a = looking(&geo, 0, Vec3::new(1.0, 0.0, 0.0));
    let b = looking(&geo, 1, Vec3::new(1.0, 0.0, 0.0));
    assert!(matches!(pseudo_gaze_loss(&geo, a, b, PseudoMode::Weighted), Err(LossError::PseudoDegenerate { .. })));
}

#[test]
fn pseudo_mode_gradient_keys() {
    let (geo, a, b) = truth(8);
    let a = GazePrediction::new(a.angles.pitch + 0.2, a.angles.yaw - 0.1, -0.5);
    let b = GazePrediction::new(b.angles.pitch - 0.1, b.angles.yaw + 0.3, 0.5);

    let conf = pseudo_gaze_loss(&geo, a, b, PseudoMode::Confident).unwrap();
    assert!(conf.grads.keys().all(|k| k.face == 1));
    assert_eq!(conf.grads.len(), 2);

    let swapped = pseudo_gaze_loss(&geo, GazePrediction { log_sigma: 0.9, ..a }, b, PseudoMode::Confident).unwrap();
    assert!(swapped.grads.keys().all(|k| k.face == 0));

    let naive = pseudo_gaze_loss(&geo, a, b, PseudoMode::Naive).unwrap();
    for f in [0, 1] {
        let g = naive.grad(f, false, Quantity::Pitch).abs() + naive.grad(f, false, Quantity::Yaw).abs();
        assert!(g > 1e-6);
    }
    let weighted = pseudo_gaze_loss(&geo, a, b, PseudoMode::Weighted).unwrap();
    assert!(weighted.grads.keys().all(|k| k.quantity != Quantity::LogSigma));
    assert_eq!(weighted.grads.len(), 4);
}

#[test]
fn confident_ties_choose_a() {
    let (geo, a, b) = truth(2);
    let b = GazePrediction::new(b.angles.pitch + 0.1, b.angles.yaw, a.log_sigma);
    let out = pseudo_gaze_loss(&geo, a, b, PseudoMode::Confident).unwrap();
    assert!(out.grads.keys().all(|k| k.face == 1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn cosine_losses_stay_in_range(
        seed in 0u64..10_000,
        da in prop::array::uniform4(-3.0..3.0f64),
        sa in -2.0..2.0f64,
        sb in -2.0..2.0f64,
    ) {
        let (geo, a, b) = truth(seed);
        let a = GazePrediction::new(a.angles.pitch + da[0] / 2.0, a.angles.yaw + da[1], sa);
        let b = GazePrediction::new(b.angles.pitch + da[2] / 2.0, b.angles.yaw + da[3], sb);
        let in_range = |v: f64| (-1e-12..=2.0 + 1e-12).contains(&v);
        if let Ok(o) = geom2d_loss(&geo, a, b) {
            prop_assert!(in_range(o.value));
        }
        prop_assert!(in_range(geom3d_cosine_variant(&geo, a, b).unwrap().value));
        for mode in [PseudoMode::Weighted, PseudoMode::Naive, PseudoMode::Confident] {
            if let Ok(o) = pseudo_gaze_loss(&geo, a, b, mode) {
                prop_assert!(in_range(o.value));
            }
        }
        let plane = geom3d_loss(&geo, a, b, Geom3dScale::Separation).unwrap();
        prop_assert!(plane.value >= 0.0 && plane.value.is_finite());
        prop_assert!(plane.grads.values().all(|g| g.is_finite()));
    }
}

#[test]
fn every_loss_passes_the_gradient_check() {
    for row in run_gradcheck(500, 11, 1e-6).unwrap() {
        assert_eq!(row.configs, 500);
        assert!(row.max_rel_err < 1e-6, "{row:?}");
    }
}

fn sweep_row(rows: &[super::gradcheck::GradcheckRow], name: &str) -> f64 {
    rows.iter().find(|r| r.loss == name).unwrap().max_rel_err
}

#[test]
fn cosine_losses_pass_a_step_sweep() {
    let coarse = run_gradcheck(200, 5, 1e-4).unwrap();
    let fine = run_gradcheck(200, 5, 1e-6).unwrap();
    for name in ["geom3d_cosine", "pseudo_weighted", "pseudo_naive", "pseudo_confident"] {
        for rows in [&coarse, &fine] {
            assert!(sweep_row(rows, name) < 1e-6, "{name}: {rows:?}");
        }
    }
    // the image-plane cosine is not sinusoidal in the angles, so its coarse
    // step error is pure O(h²) truncation: 100× the step, 10⁴× the error
    let ratio = sweep_row(&coarse, "geom2d") / sweep_row(&fine, "geom2d");
    assert!((ratio / 1e4 - 1.0).abs() < 0.05, "{ratio}");
    assert!(sweep_row(&fine, "geom2d") < 1e-6);
}

// objective

#[test]
fn ramp_examples() {
    assert_eq!(ramp(1500, 3000), 0.5);
    assert_eq!(ramp(3000, 3000), 1.0);
    assert_eq!(ramp(9000, 3000), 1.0);
    assert_eq!(ramp(0, 2400), 0.0);
}

#[test]
fn supervised_only_at_start_is_the_mean_aleatoric_loss() {
    let preds = [GazePrediction::new(0.1, 0.2, 0.3), GazePrediction::new(-0.2, 0.4, -0.1)];
    let gts = [GazeAngles::new(0.0, 0.0), GazeAngles::new(0.1, 0.1)];
    let supervised: Vec<_> = (0..2).map(|f| SupervisedSample { face: f, pred: preds[f], gt: gts[f] }).collect();
    let sym: Vec<_> = (0..2).map(|f| MirrorSample { face: f, original: preds[f], mirrored: preds[f] }).collect();
    let input = ObjectiveInput { supervised: &supervised, symmetry: &sym, laeo: &[] };
    let (out, bd) = total_objective(0, &input, &LossWeights::default(), &Schedule::default()).unwrap();
    let expected = (aleatoric_loss(preds[0], gts[0]).value + aleatoric_loss(preds[1], gts[1]).value) / 2.0;
    assert!((out.value - expected).abs() < 1e-15);
    assert_eq!((bd.alpha, bd.beta), (0.0, 0.0));
}

#[test]
fn coefficients_follow_the_ramps() {
    let w = LossWeights::default();
    let s = Schedule::default();
    assert_eq!(coefficients(0, &w, &s, false), [1.0, 0.0, 0.0]);
    assert_eq!(coefficients(2400, &w, &s, false), [1.0, 0.8, 1.0]);
    assert_eq!(coefficients(24_000, &w, &s, false), [1.0, 1.0, 1.0]);
    assert_eq!(coefficients(0, &w, &s, true), [0.0, 0.0, 1.0]);
}

#[test]
fn objective_is_linear_in_its_components() {
    let unit = |face| LossOutput { value: 1.0, grads: [(GradKey::new(face, false, Quantity::Pitch), 1.0)].into() };
    let parts = ComponentParts {
        aleatoric: Some(unit(0)),
        symmetry: Some(unit(1)),
        laeo: [(LaeoComponent::Geom3d, unit(2))].into(),
        exclusions: Exclusions::default(),
    };
    let w = LossWeights::default();
    let s = Schedule::default();
    for i in [0, 2400, 24_000] {
        let c = coefficients(i, &w, &s, false);
        let out = combine(&parts, c);
        assert_eq!(out.grad(0, false, Quantity::Pitch), c[0]);
        assert_eq!(out.grad(1, false, Quantity::Pitch), c[1]);
        assert_eq!(out.grad(2, false, Quantity::Pitch), c[2]);
        assert_eq!(out.value, c[0] + c[1] + c[2]);
    }
}

fn laeo_batch<'a>(geos: &'a [PairGeometry], preds: &[(GazePrediction, GazePrediction)]) -> Vec<LaeoSample<'a>> {
    geos.iter()
        .zip(preds)
        .enumerate()
        .map(|(k, (g, &(a, b)))| LaeoSample { geometry: g, face_a: 2 * k, face_b: 2 * k + 1, pred_a: a, pred_b: b })
        .collect()
}

#[test]
fn truth_is_stationary() {
    let (geos, preds): (Vec<_>, Vec<_>) = (0..16u64)
        .map(|s| {
            let (g, a, b) = truth(s);
            (g, (a, b))
        })
        .unzip();
    let laeo = laeo_batch(&geos, &preds);
    for mode in [PseudoMode::Weighted, PseudoMode::Naive, PseudoMode::Confident] {
        for geom3d_mode in [Geom3dMode::PlaneDistance, Geom3dMode::Cosine] {
            let weights = LossWeights { symmetry: false, pseudo_mode: mode, geom3d_mode, ..Default::default() };
            let input = ObjectiveInput { laeo: &laeo, ..Default::default() };
            let (out, bd) = total_objective(5000, &input, &weights, &Schedule::default()).unwrap();
            assert!(out.value.abs() < 1e-9, "{bd:?}");
            assert!(out.grad_norm() < 1e-6, "{}", out.grad_norm());
            assert_eq!(bd.exclusions.total(), 0);
        }
    }
}

#[test]
fn disabled_components_leave_no_keys() {
    let (geo, a, b) = truth(1);
    let a = GazePrediction::new(a.angles.pitch + 0.1, a.angles.yaw, 0.0);
    let laeo = [LaeoSample { geometry: &geo, face_a: 0, face_b: 1, pred_a: a, pred_b: b }];
    let input = ObjectiveInput { laeo: &laeo, ..Default::default() };
    let s = Schedule::default();
    let confident = LossWeights {
        symmetry: false,
        pseudo_mode: PseudoMode::Confident,
        laeo_components: [LaeoComponent::Pseudo].into(),
        ..Default::default()
    };
    // A is the source here (ties), so only B's keys appear
    let (out, _) = total_objective(0, &input, &confident, &s).unwrap();
    assert!(out.grads.keys().all(|k| k.face == 1));
    let none = LossWeights { laeo_components: Default::default(), symmetry: false, ..Default::default() };
    let (out, _) = total_objective(0, &input, &none, &s).unwrap();
    assert!(out.grads.is_empty());
    assert!(matches!(total_objective(0, &ObjectiveInput::default(), &none, &s), Err(LossError::Empty)));
}

#[test]
fn degenerate_geom2d_pairs_are_counted_not_fatal() {
    let (geo, a, b) = truth(1);
    let zero = GazePrediction::new(0.0, 0.0, 0.0);
    let laeo = [
        LaeoSample { geometry: &geo, face_a: 0, face_b: 1, pred_a: zero, pred_b: zero },
        LaeoSample { geometry: &geo, face_a: 2, face_b: 3, pred_a: a, pred_b: b },
    ];
    let input = ObjectiveInput { laeo: &laeo, ..Default::default() };
    let (_, bd) = total_objective(0, &input, &LossWeights::default(), &Schedule::default()).unwrap();
    assert_eq!(bd.exclusions.geom2d, 1);
    assert_eq!(bd.exclusions.geom3d, 0);
}
