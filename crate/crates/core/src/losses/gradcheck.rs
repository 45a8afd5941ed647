//! Finite-difference verification of every loss on random configurations
//! drawn away from each loss's nonsmooth set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    aleatoric_loss, coefficients, geom2d_loss, geom3d_cosine_variant, geom3d_loss, pair_params, pseudo_gaze_loss,
    symmetry_loss, total_objective, Aleatoric, GazePrediction, Geom3dScale, LaeoComponent, LaeoSample, LossError,
    LossOutput, LossWeights, MirrorSample, ObjectiveInput, PairGeometry, PairKind, PairObjective, PseudoMode,
    PseudoTarget, Quantity, Schedule, SupervisedSample, Symmetry,
};
use crate::geometry::{angle_between, ray_plane_intersect, FacePlane, GazeAngles, UnitVec3};
use crate::grad::{fd_check_wide_against, Objective};
use crate::scalar::Scalar;
use crate::scene::{derive_seed, derived_gaze_label, synth_scene, SynthConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckedLoss {
    Aleatoric,
    Symmetry,
    Geom2d,
    Geom3dPlane,
    Geom3dPlaneRawMm,
    Geom3dCosine,
    PseudoWeighted,
    PseudoNaive,
    PseudoConfident,
    TotalObjective,
}

impl CheckedLoss {
    pub const ALL: [CheckedLoss; 10] = [
        CheckedLoss::Aleatoric,
        CheckedLoss::Symmetry,
        CheckedLoss::Geom2d,
        CheckedLoss::Geom3dPlane,
        CheckedLoss::Geom3dPlaneRawMm,
        CheckedLoss::Geom3dCosine,
        CheckedLoss::PseudoWeighted,
        CheckedLoss::PseudoNaive,
        CheckedLoss::PseudoConfident,
        CheckedLoss::TotalObjective,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckedLoss::Aleatoric => "aleatoric",
            CheckedLoss::Symmetry => "symmetry",
            CheckedLoss::Geom2d => "geom2d",
            CheckedLoss::Geom3dPlane => "geom3d_plane",
            CheckedLoss::Geom3dPlaneRawMm => "geom3d_plane_raw_mm",
            CheckedLoss::Geom3dCosine => "geom3d_cosine",
            CheckedLoss::PseudoWeighted => "pseudo_weighted",
            CheckedLoss::PseudoNaive => "pseudo_naive",
            CheckedLoss::PseudoConfident => "pseudo_confident",
            CheckedLoss::TotalObjective => "total_objective",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradcheckRow {
    pub loss: &'static str,
    pub configs: usize,
    pub max_rel_err: f64,
}

/// Residuals closer than this to a kink of `|·|` are resampled.
pub const KINK_MARGIN: f64 = 1e-3;

/// Check every loss on `n` configurations.
pub fn run_gradcheck(n: usize, seed: u64, step: f64) -> Result<Vec<GradcheckRow>, LossError> {
    CheckedLoss::ALL
        .iter()
        .enumerate()
        .map(|(k, &loss)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, k as u64));
            let mut worst = 0.0f64;
            for _ in 0..n {
                worst = worst.max(check_one(loss, &mut rng, step)?);
            }
            Ok(GradcheckRow { loss: loss.name(), configs: n, max_rel_err: worst })
        })
        .collect()
}

fn random_prediction(truth: GazeAngles, rng: &mut impl Rng, spread: f64) -> GazePrediction {
    GazePrediction::new(
        truth.pitch + rng.random_range(-spread..spread),
        truth.yaw + rng.random_range(-spread..spread),
        rng.random_range(-1.0..1.0),
    )
}

/// A random pair with predictions scattered around the true labels.
fn random_pair(rng: &mut impl Rng, spread: f64) -> (PairGeometry, GazePrediction, GazePrediction) {
    let pair = synth_scene(&SynthConfig::default(), rng.random()).expect("default placement is feasible");
    let (la, lb) = derived_gaze_label(&pair).expect("synthetic eyes are distinct");
    let geo = PairGeometry::new(&pair).expect("valid pair");
    (geo, random_prediction(la, rng, spread), random_prediction(lb, rng, spread))
}

fn symmetric_smooth(o: GazePrediction, m: GazePrediction) -> bool {
    (o.angles.pitch - m.angles.pitch).abs() > KINK_MARGIN && (o.angles.yaw + m.angles.yaw).abs() > KINK_MARGIN
}

fn aleatoric_smooth(p: GazePrediction, gt: GazeAngles) -> bool {
    (p.angles.pitch - gt.pitch).abs() > KINK_MARGIN && (p.angles.yaw - gt.yaw).abs() > KINK_MARGIN
}

/// Gaze well away from the camera ray, where the 2D projection collapses.
fn geom2d_smooth(geo: &PairGeometry, a: GazePrediction, b: GazePrediction) -> bool {
    [a, b].iter().enumerate().all(|(i, p)| {
        let g = geo.camera_gaze(i, p.angles);
        let ang = angle_between(g, geo.subjects[i].eye3d);
        ang > 1f64.to_radians() && ang < 179f64.to_radians()
    })
}

/// Each ray clearly hits the other's face plane in front of it (and not
/// exactly at the target), or clearly falls back.
fn geom3d_smooth(geo: &PairGeometry, a: GazePrediction, b: GazePrediction) -> bool {
    [a, b].iter().enumerate().all(|(i, p)| {
        let g = geo.camera_gaze(i, p.angles);
        let other = &geo.subjects[1 - i];
        let n = other.heading.as_vec();
        if n.dot(g).abs() <= KINK_MARGIN {
            return false;
        }
        let plane = FacePlane { point: other.eye3d, normal: other.heading };
        let origin = geo.subjects[i].eye3d;
        match ray_plane_intersect(origin, UnitVec3::new_unchecked(g), &plane) {
            Ok((hit, t)) if t > 0.0 => (hit - other.eye3d).norm() > 1e-6 * geo.separation_mm,
            _ => {
                let w = other.eye3d - origin;
                (w.dot(g) / w.norm()).abs() > KINK_MARGIN
            }
        }
    })
}

fn check_pair(
    rng: &mut impl Rng,
    step: f64,
    smooth: impl Fn(&PairGeometry, GazePrediction, GazePrediction) -> bool,
    analytic: impl Fn(&PairGeometry, GazePrediction, GazePrediction) -> Result<LossOutput, LossError>,
    kind: impl Fn(&PairGeometry, GazePrediction, GazePrediction) -> Result<PairKind, LossError>,
) -> Result<f64, LossError> {
    loop {
        let (geo, a, b) = random_pair(rng, 0.8);
        if !smooth(&geo, a, b) {
            continue;
        }
        let out = analytic(&geo, a, b)?;
        let objective = PairObjective { geo: &geo, kind: kind(&geo, a, b)? };
        let params = pair_params(a, b);
        let g = dense(&out, 2, false);
        return fd_check_wide_against(&g, &objective, &params, step);
    }
}

/// Gradient laid out as `[face 0: θ φ s, face 1: θ φ s, ..]`, mirrored
/// faces after all originals.
fn dense(out: &LossOutput, faces: usize, with_mirrored: bool) -> Vec<f64> {
    let views: &[bool] = if with_mirrored { &[false, true] } else { &[false] };
    views
        .iter()
        .flat_map(|&m| (0..faces).flat_map(move |f| Quantity::ALL.iter().map(move |&q| out.grad(f, m, q))))
        .collect()
}

fn check_one(loss: CheckedLoss, rng: &mut impl Rng, step: f64) -> Result<f64, LossError> {
    let always = |_: &PairGeometry, _, _| true;
    match loss {
        CheckedLoss::Aleatoric => loop {
            let gt = GazeAngles::new(rng.random_range(-1.2..1.2), rng.random_range(-3.0..3.0));
            let p = random_prediction(gt, rng, 0.8);
            if !aleatoric_smooth(p, gt) {
                continue;
            }
            let g = dense(&aleatoric_loss(p, gt), 1, false);
            return fd_check_wide_against(&g, &Aleatoric(gt), &p.to_array(), step);
        },
        CheckedLoss::Symmetry => loop {
            let truth = GazeAngles::new(rng.random_range(-1.2..1.2), rng.random_range(-3.0..3.0));
            let o = random_prediction(truth, rng, 0.3);
            let m = random_prediction(truth.mirrored(), rng, 0.3);
            if !symmetric_smooth(o, m) {
                continue;
            }
            let out = symmetry_loss(o, m)?;
            let g = dense(&out, 1, true);
            let objective = Symmetry::at(o, m);
            return fd_check_wide_against(&g, &objective, &pair_params(o, m), step);
        },
        CheckedLoss::Geom2d => check_pair(rng, step, geom2d_smooth, geom2d_loss, |_, _, _| Ok(PairKind::Geom2d)),
        CheckedLoss::Geom3dPlane | CheckedLoss::Geom3dPlaneRawMm => {
            let scale = if loss == CheckedLoss::Geom3dPlane { Geom3dScale::Separation } else { Geom3dScale::RawMm };
            check_pair(
                rng,
                step,
                geom3d_smooth,
                |g, a, b| geom3d_loss(g, a, b, scale),
                |_, _, _| Ok(PairKind::Geom3dPlane(scale)),
            )
        }
        CheckedLoss::Geom3dCosine => {
            check_pair(rng, step, always, geom3d_cosine_variant, |_, _, _| Ok(PairKind::Geom3dCosine))
        }
        CheckedLoss::PseudoWeighted | CheckedLoss::PseudoNaive | CheckedLoss::PseudoConfident => {
            let mode = match loss {
                CheckedLoss::PseudoWeighted => PseudoMode::Weighted,
                CheckedLoss::PseudoNaive => PseudoMode::Naive,
                _ => PseudoMode::Confident,
            };
            check_pair(
                rng,
                step,
                always,
                |g, a, b| pseudo_gaze_loss(g, a, b, mode),
                |g, a, b| Ok(PairKind::Pseudo(PseudoTarget::at(g, a, b, mode)?)),
            )
        }
        CheckedLoss::TotalObjective => check_total(rng, step),
    }
}

/// Two pairs (faces 0..4), supervision on faces 0 and 2, mirror terms on all
/// four faces, every mutual-gaze component on.
fn check_total(rng: &mut impl Rng, step: f64) -> Result<f64, LossError> {
    const FACES: usize = 4;
    let weights = LossWeights { alpha: 0.7, beta: 0.9, ..LossWeights::default() };
    let schedule = Schedule::default();
    loop {
        let (g0, a0, b0) = random_pair(rng, 0.8);
        let (g1, a1, b1) = random_pair(rng, 0.8);
        let preds = [a0, b0, a1, b1];
        let mirrored: Vec<GazePrediction> =
            preds.iter().map(|p| random_prediction(p.angles.mirrored(), rng, 0.3)).collect();
        let gts: Vec<GazeAngles> = [a0, a1].iter().map(|p| random_prediction(p.angles, rng, 0.3).angles).collect();
        let smooth = geom2d_smooth(&g0, a0, b0)
            && geom2d_smooth(&g1, a1, b1)
            && geom3d_smooth(&g0, a0, b0)
            && geom3d_smooth(&g1, a1, b1)
            && preds.iter().zip(&mirrored).all(|(&o, &m)| symmetric_smooth(o, m))
            && aleatoric_smooth(a0, gts[0])
            && aleatoric_smooth(a1, gts[1]);
        if !smooth {
            continue;
        }
        let i = rng.random_range(0..6000u64);
        let supervised =
            [SupervisedSample { face: 0, pred: a0, gt: gts[0] }, SupervisedSample { face: 2, pred: a1, gt: gts[1] }];
        let symmetry: Vec<MirrorSample> =
            (0..FACES).map(|f| MirrorSample { face: f, original: preds[f], mirrored: mirrored[f] }).collect();
        let laeo = [
            LaeoSample { geometry: &g0, face_a: 0, face_b: 1, pred_a: a0, pred_b: b0 },
            LaeoSample { geometry: &g1, face_a: 2, face_b: 3, pred_a: a1, pred_b: b1 },
        ];
        let input = ObjectiveInput { supervised: &supervised, symmetry: &symmetry, laeo: &laeo };
        let (out, _) = total_objective(i, &input, &weights, &schedule)?;
        let analytic = dense(&out, FACES, true);

        let coeffs = coefficients(i, &weights, &schedule, false);
        let sym_objectives: Vec<Symmetry> = (0..FACES).map(|f| Symmetry::at(preds[f], mirrored[f])).collect();
        let mut pair_objectives = Vec::new();
        for c in [LaeoComponent::Geom3d, LaeoComponent::Geom2d, LaeoComponent::Pseudo] {
            for (geo, a, b) in [(&g0, a0, b0), (&g1, a1, b1)] {
                let kind = PairKind::configured(c, &weights, geo, a, b)?;
                pair_objectives.push(PairObjective { geo, kind });
            }
        }
        let params: Vec<f64> = preds.iter().chain(&mirrored).flat_map(|p| p.to_array()).collect();
        let reference = TotalReference {
            coeffs,
            supervised: [(0, gts[0]), (2, gts[1])],
            symmetry: sym_objectives,
            pairs: pair_objectives,
        };
        return fd_check_wide_against(&analytic, &reference, &params, step);
    }
}

/// Frozen-target re-evaluation of the objective built in [`check_total`],
/// over `[originals of faces 0..4; mirrored of faces 0..4]`.
struct TotalReference<'a> {
    coeffs: [f64; 3],
    supervised: [(usize, GazeAngles); 2],
    symmetry: Vec<Symmetry>,
    pairs: Vec<PairObjective<'a>>,
}

impl Objective for TotalReference<'_> {
    type Error = LossError;

    fn eval<T: Scalar>(&self, x: &[T]) -> Result<T, LossError> {
        let faces = self.symmetry.len();
        let orig = |f: usize| &x[3 * f..3 * f + 3];
        let mirr = |f: usize| &x[3 * (faces + f)..3 * (faces + f) + 3];
        let mut l_g = T::zero();
        for &(f, gt) in &self.supervised {
            l_g = l_g + Aleatoric(gt).eval(orig(f))?;
        }
        let mut l_sym = T::zero();
        for (f, o) in self.symmetry.iter().enumerate() {
            let p: Vec<T> = orig(f).iter().chain(mirr(f)).copied().collect();
            l_sym = l_sym + o.eval(&p)?;
        }
        let mut l_laeo = T::zero();
        for (k, o) in self.pairs.iter().enumerate() {
            let base = 2 * (k % 2);
            let p: Vec<T> = orig(base).iter().chain(orig(base + 1)).copied().collect();
            l_laeo = l_laeo + o.eval(&p)?;
        }
        let [c_g, c_sym, c_laeo] = self.coeffs;
        let n_sup = self.supervised.len() as f64;
        Ok(l_g * T::of(c_g / n_sup) + l_sym * T::of(c_sym / faces as f64) + l_laeo * T::of(c_laeo / 2.0))
    }
}
