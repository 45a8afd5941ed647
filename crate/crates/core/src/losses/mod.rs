//! Training losses: aleatoric regression, mirror symmetry, and the three
//! mutual-gaze losses, each returning its value and exact partials.
//!
//! Every loss is written once over a generic [`Scalar`] and differentiated
//! with dual numbers, so the reported gradients are exact.

pub mod gradcheck;
mod objective;

pub use objective::{
    coefficients, combine, component_parts, objective_with, ramp, total_objective, Breakdown, ComponentParts,
    Exclusions, LaeoSample, MirrorSample, ObjectiveInput, Schedule, SupervisedSample,
};

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::geometry::{
    angles_to_vector, normalized_frame, project_gaze_dir, ray_plane_intersect, CameraIntrinsics, FacePlane, GazeAngles,
    GeometryError, Mat3, UnitVec3, Vec2, Vec3,
};
use crate::grad::{partials, GradError, Objective};
use crate::scalar::Scalar;
use crate::scene::LaeoPair;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("pseudo target vanishes (norm {norm:e}): predictions exactly oppose each other")]
    PseudoDegenerate { norm: f64 },
    #[error("non-finite loss or gradient at input {index}")]
    NonFinite { index: usize },
    #[error("objective has no supervised, symmetry or mutual-gaze terms")]
    Empty,
    #[error("non-finite {component} loss for pair {frame_id}")]
    NonFinitePair { component: &'static str, frame_id: String },
}

impl From<GradError<LossError>> for LossError {
    fn from(e: GradError<LossError>) -> Self {
        match e {
            GradError::Eval(e) => e,
            GradError::NonFinite { index } => LossError::NonFinite { index },
        }
    }
}

/// Gaze angles in the eye-normalized frame plus the log of the predicted
/// absolute deviation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GazePrediction<T = f64> {
    pub angles: GazeAngles<T>,
    pub log_sigma: T,
}

impl<T: Scalar> GazePrediction<T> {
    pub fn new(pitch: T, yaw: T, log_sigma: T) -> Self {
        Self { angles: GazeAngles::new(pitch, yaw), log_sigma }
    }

    pub fn sigma(&self) -> T {
        self.log_sigma.exp()
    }

    fn from_slice(p: &[T]) -> Self {
        Self::new(p[0], p[1], p[2])
    }
}

impl GazePrediction<f64> {
    pub fn to_array(self) -> [f64; 3] {
        [self.angles.pitch, self.angles.yaw, self.log_sigma]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quantity {
    Pitch,
    Yaw,
    LogSigma,
}

impl Quantity {
    pub const ALL: [Quantity; 3] = [Quantity::Pitch, Quantity::Yaw, Quantity::LogSigma];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// One predicted scalar: which face, whether it was predicted on the
/// mirrored input, and which output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GradKey {
    pub face: usize,
    pub mirrored: bool,
    pub quantity: Quantity,
}

impl GradKey {
    pub fn new(face: usize, mirrored: bool, quantity: Quantity) -> Self {
        Self { face, mirrored, quantity }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LossOutput {
    pub value: f64,
    /// Partials with respect to exactly the inputs that receive gradient.
    pub grads: BTreeMap<GradKey, f64>,
}

impl LossOutput {
    pub fn grad(&self, face: usize, mirrored: bool, quantity: Quantity) -> f64 {
        self.grads.get(&GradKey::new(face, mirrored, quantity)).copied().unwrap_or(0.0)
    }

    pub fn grad_norm(&self) -> f64 {
        self.grads.values().map(|g| g * g).sum::<f64>().sqrt()
    }

    /// `self += c·other`, merging gradient keys.
    pub fn add_scaled(&mut self, other: &LossOutput, c: f64) {
        self.value += c * other.value;
        for (k, g) in &other.grads {
            *self.grads.entry(*k).or_insert(0.0) += c * g;
        }
    }

    /// Rename the face indices of every key.
    pub fn with_faces(self, map: impl Fn(usize) -> usize) -> Self {
        let grads = self.grads.into_iter().map(|(k, g)| (GradKey { face: map(k.face), ..k }, g)).collect();
        Self { value: self.value, grads }
    }

    fn from_partials(value: f64, keys: &[GradKey], grads: &[f64]) -> Self {
        Self { value, grads: keys.iter().copied().zip(grads.iter().copied()).collect() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LaeoComponent {
    Geom3d,
    Geom2d,
    Pseudo,
}

impl LaeoComponent {
    pub fn name(self) -> &'static str {
        match self {
            LaeoComponent::Geom3d => "geom3d",
            LaeoComponent::Geom2d => "geom2d",
            LaeoComponent::Pseudo => "pseudo",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PseudoMode {
    #[default]
    Weighted,
    Naive,
    Confident,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Geom3dMode {
    #[default]
    PlaneDistance,
    Cosine,
}

/// Units of the plane-distance loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Geom3dScale {
    /// Divided by the distance between the two subjects (dimensionless).
    #[default]
    Separation,
    /// Millimeters.
    RawMm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    pub symmetry: bool,
    pub laeo_components: BTreeSet<LaeoComponent>,
    pub pseudo_mode: PseudoMode,
    pub geom3d_mode: Geom3dMode,
    pub geom3d_scale: Geom3dScale,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            symmetry: true,
            laeo_components: [LaeoComponent::Geom3d, LaeoComponent::Geom2d, LaeoComponent::Pseudo].into(),
            pseudo_mode: PseudoMode::default(),
            geom3d_mode: Geom3dMode::default(),
            geom3d_scale: Geom3dScale::default(),
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        Ok(())
    }

    pub fn has(&self, c: LaeoComponent) -> bool {
        self.laeo_components.contains(&c)
    }
}

/// Per-subject quantities the mutual-gaze losses need.
#[derive(Clone, Debug, PartialEq)]
pub struct SubjectGeometry {
    pub eye2d: Vec2<f64>,
    pub eye3d: Vec3<f64>,
    pub heading: UnitVec3<f64>,
    /// Camera frame to eye-normalized frame.
    pub to_normalized: Mat3<f64>,
}

/// A pair prepared for loss evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct PairGeometry {
    pub subjects: [SubjectGeometry; 2],
    pub camera: CameraIntrinsics,
    pub separation_mm: f64,
    pub frame_id: String,
}

impl PairGeometry {
    pub fn new(pair: &LaeoPair) -> Result<Self, LossError> {
        let subject = |s: &crate::scene::SubjectObservation| -> Result<SubjectGeometry, LossError> {
            Ok(SubjectGeometry {
                eye2d: s.cyclopean_2d,
                eye3d: s.cyclopean_3d,
                heading: s.heading,
                to_normalized: normalized_frame(s.cyclopean_3d)?,
            })
        };
        let subjects = [subject(&pair.subject_a)?, subject(&pair.subject_b)?];
        let separation_mm = (subjects[1].eye3d - subjects[0].eye3d).norm();
        if !(separation_mm > 0.0) {
            return Err(GeometryError::Coincident.into());
        }
        Ok(Self { subjects, camera: pair.camera, separation_mm, frame_id: pair.frame_id.clone() })
    }

    /// Camera-frame unit gaze of subject `i` for normalized-frame angles.
    pub fn camera_gaze<T: Scalar>(&self, i: usize, angles: GazeAngles<T>) -> Vec3<T> {
        let r = self.subjects[i].to_normalized.transpose().lift::<T>();
        r.mul_vec(angles_to_vector(angles).as_vec())
    }

    fn toward_other_3d(&self, i: usize) -> Vec3<f64> {
        let d = self.subjects[1 - i].eye3d - self.subjects[i].eye3d;
        d.scale(1.0 / d.norm())
    }
}

fn half<T: Scalar>() -> T {
    T::of(0.5)
}

fn aleatoric_value<T: Scalar>(pred: GazePrediction<T>, gt: GazeAngles<T>) -> T {
    let residual = (pred.angles.pitch - gt.pitch).abs() + (pred.angles.yaw - gt.yaw).abs();
    T::of(2.0) * pred.log_sigma + residual / pred.sigma()
}

fn lift_angles<T: Scalar>(g: GazeAngles<f64>) -> GazeAngles<T> {
    GazeAngles::new(T::of(g.pitch), T::of(g.yaw))
}

/// Each prediction regressed onto the yaw-flipped other, with both targets
/// held constant.
fn symmetry_value<T: Scalar>(original: GazePrediction<T>, mirrored: GazePrediction<T>, targets: &SymmetryTargets) -> T {
    (aleatoric_value(mirrored, lift_angles(targets.for_mirrored))
        + aleatoric_value(original, lift_angles(targets.for_original)))
        * half()
}

/// Detached targets of the symmetry loss.
#[derive(Clone, Copy, Debug, PartialEq)]
struct SymmetryTargets {
    for_mirrored: GazeAngles<f64>,
    for_original: GazeAngles<f64>,
}

impl SymmetryTargets {
    fn at(original: GazePrediction, mirrored: GazePrediction) -> Self {
        Self { for_mirrored: original.angles.mirrored(), for_original: mirrored.angles.mirrored() }
    }
}

fn geom2d_value<T: Scalar>(geo: &PairGeometry, a: GazePrediction<T>, b: GazePrediction<T>) -> Result<T, LossError> {
    let d = geo.subjects[1].eye2d - geo.subjects[0].eye2d;
    let n = d.norm();
    if !(n > 0.0) {
        return Err(GeometryError::Coincident.into());
    }
    let mut total = T::zero();
    for (i, pred) in [a, b].into_iter().enumerate() {
        let toward = if i == 0 { d } else { -d }.scale(1.0 / n).lift::<T>();
        let g = UnitVec3::new_unchecked(geo.camera_gaze(i, pred.angles));
        let dir = project_gaze_dir(geo.subjects[i].eye3d.lift::<T>(), g, &geo.camera)?;
        total = total + T::one() - dir.dot(toward);
    }
    Ok(total * half())
}

/// Relative miss distance below which a ray counts as hitting its target.
pub const HIT_TOLERANCE: f64 = 1e-9;

fn plane_distance<T: Scalar>(geo: &PairGeometry, i: usize, gaze: Vec3<T>) -> T {
    let origin = geo.subjects[i].eye3d.lift::<T>();
    let other = &geo.subjects[1 - i];
    let target = other.eye3d.lift::<T>();
    let plane = FacePlane { point: target, normal: other.heading.lift::<T>() };
    match ray_plane_intersect(origin, UnitVec3::new_unchecked(gaze), &plane) {
        Ok((hit, t)) if t.re() > 0.0 => {
            let d = (hit - target).norm();
            // a rounding-level miss is an exact hit: zero subgradient, the
            // same convention as sign(0) = 0
            if d.re() <= HIT_TOLERANCE * geo.separation_mm {
                T::of(d.re())
            } else {
                d
            }
        }
        _ => {
            // ray misses the plane: distance from the target to the ray, or,
            // when the target lies behind the eye, that distance grown by the
            // angular miss so the gradient still points toward it
            let w = target - origin;
            let s = w.dot(gaze);
            if s.re() > 0.0 {
                (w - gaze.scale(s)).norm()
            } else {
                let len = w.norm();
                len * (T::one() - s / len)
            }
        }
    }
}

fn geom3d_plane_value<T: Scalar>(
    geo: &PairGeometry,
    a: GazePrediction<T>,
    b: GazePrediction<T>,
    scale: Geom3dScale,
) -> T {
    let total =
        plane_distance(geo, 0, geo.camera_gaze(0, a.angles)) + plane_distance(geo, 1, geo.camera_gaze(1, b.angles));
    let unit = match scale {
        Geom3dScale::Separation => geo.separation_mm,
        Geom3dScale::RawMm => 1.0,
    };
    total * T::of(0.5 / unit)
}

fn geom3d_cosine_value<T: Scalar>(geo: &PairGeometry, a: GazePrediction<T>, b: GazePrediction<T>) -> T {
    let mut total = T::zero();
    for (i, pred) in [a, b].into_iter().enumerate() {
        let g = geo.camera_gaze(i, pred.angles);
        total = total + T::one() - g.dot(geo.toward_other_3d(i).lift::<T>());
    }
    total * half()
}

/// `(w_A, w_B) = (σ_B, σ_A) / (σ_A + σ_B)`.
pub fn pseudo_weights(sigma_a: f64, sigma_b: f64) -> (f64, f64) {
    let s = sigma_a + sigma_b;
    (sigma_b / s, sigma_a / s)
}

/// The constant target of the pseudo-label loss, fixed from the current
/// predictions before differentiation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PseudoTarget {
    /// Unit camera-frame target for A (B's target is its negation).
    Weighted(Vec3<f64>),
    /// No target: A and B are pulled toward each other.
    Naive,
    /// The more confident subject's camera-frame gaze; only `learner` is
    /// trained.
    Confident { learner: usize, source_gaze: Vec3<f64> },
}

impl PseudoTarget {
    pub fn at(geo: &PairGeometry, a: GazePrediction, b: GazePrediction, mode: PseudoMode) -> Result<Self, LossError> {
        let ga = geo.camera_gaze(0, a.angles);
        let gb = geo.camera_gaze(1, b.angles);
        Ok(match mode {
            PseudoMode::Weighted => {
                let (wa, wb) = pseudo_weights(a.sigma(), b.sigma());
                let p = ga.scale(wa) - gb.scale(wb);
                let norm = p.norm();
                if norm < 1e-9 {
                    return Err(LossError::PseudoDegenerate { norm });
                }
                PseudoTarget::Weighted(p.scale(1.0 / norm))
            }
            PseudoMode::Naive => PseudoTarget::Naive,
            // ties go to A as the source
            PseudoMode::Confident if a.sigma() <= b.sigma() => PseudoTarget::Confident { learner: 1, source_gaze: ga },
            PseudoMode::Confident => PseudoTarget::Confident { learner: 0, source_gaze: gb },
        })
    }

    fn learners(&self) -> &'static [usize] {
        match self {
            PseudoTarget::Confident { learner: 0, .. } => &[0],
            PseudoTarget::Confident { .. } => &[1],
            _ => &[0, 1],
        }
    }
}

fn pseudo_value<T: Scalar>(geo: &PairGeometry, a: GazePrediction<T>, b: GazePrediction<T>, target: &PseudoTarget) -> T {
    let ga = geo.camera_gaze(0, a.angles);
    let gb = geo.camera_gaze(1, b.angles);
    let one = T::one();
    match *target {
        PseudoTarget::Weighted(p) => {
            let p = p.lift::<T>();
            ((one - ga.dot(p)) + (one + gb.dot(p))) * half()
        }
        PseudoTarget::Naive => one + ga.dot(gb),
        PseudoTarget::Confident { learner: 0, source_gaze } => one + ga.dot(source_gaze.lift()),
        PseudoTarget::Confident { source_gaze, .. } => one + gb.dot(source_gaze.lift()),
    }
}

/// Which generic loss a [`PairObjective`] evaluates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PairKind {
    Geom2d,
    Geom3dPlane(Geom3dScale),
    Geom3dCosine,
    Pseudo(PseudoTarget),
}

impl PairKind {
    /// The configured kind for `component`, with any pseudo target fixed at
    /// the current predictions.
    pub fn configured(
        component: LaeoComponent,
        weights: &LossWeights,
        geo: &PairGeometry,
        a: GazePrediction,
        b: GazePrediction,
    ) -> Result<Self, LossError> {
        Ok(match (component, weights.geom3d_mode) {
            (LaeoComponent::Geom2d, _) => PairKind::Geom2d,
            (LaeoComponent::Geom3d, Geom3dMode::PlaneDistance) => PairKind::Geom3dPlane(weights.geom3d_scale),
            (LaeoComponent::Geom3d, Geom3dMode::Cosine) => PairKind::Geom3dCosine,
            (LaeoComponent::Pseudo, _) => PairKind::Pseudo(PseudoTarget::at(geo, a, b, weights.pseudo_mode)?),
        })
    }
}

/// A pair loss over the six predicted scalars `[θ_A, φ_A, s_A, θ_B, φ_B, s_B]`.
/// Detached targets are part of the objective, so plain `f64` evaluation
/// differentiates exactly what the dual evaluation does.
#[derive(Clone, Copy, Debug)]
pub struct PairObjective<'a> {
    pub geo: &'a PairGeometry,
    pub kind: PairKind,
}

impl Objective for PairObjective<'_> {
    type Error = LossError;

    fn eval<T: Scalar>(&self, p: &[T]) -> Result<T, LossError> {
        let a = GazePrediction::from_slice(&p[0..3]);
        let b = GazePrediction::from_slice(&p[3..6]);
        match self.kind {
            PairKind::Geom2d => geom2d_value(self.geo, a, b),
            PairKind::Geom3dPlane(s) => Ok(geom3d_plane_value(self.geo, a, b, s)),
            PairKind::Geom3dCosine => Ok(geom3d_cosine_value(self.geo, a, b)),
            PairKind::Pseudo(t) => Ok(pseudo_value(self.geo, a, b, &t)),
        }
    }
}

/// Aleatoric loss over `[θ, φ, s]` against a fixed ground truth.
#[derive(Clone, Copy, Debug)]
pub struct Aleatoric(pub GazeAngles<f64>);

impl Objective for Aleatoric {
    type Error = LossError;
    fn eval<T: Scalar>(&self, p: &[T]) -> Result<T, LossError> {
        let gt = GazeAngles::new(T::of(self.0.pitch), T::of(self.0.yaw));
        Ok(aleatoric_value(GazePrediction::from_slice(p), gt))
    }
}

/// Symmetry loss over `[original; mirrored]` with targets fixed at the
/// point it was built from.
#[derive(Clone, Copy, Debug)]
pub struct Symmetry(SymmetryTargets);

impl Symmetry {
    pub fn at(original: GazePrediction, mirrored: GazePrediction) -> Self {
        Self(SymmetryTargets::at(original, mirrored))
    }
}

impl Objective for Symmetry {
    type Error = LossError;
    fn eval<T: Scalar>(&self, p: &[T]) -> Result<T, LossError> {
        let o = GazePrediction::from_slice(&p[0..3]);
        let m = GazePrediction::from_slice(&p[3..6]);
        Ok(symmetry_value(o, m, &self.0))
    }
}

pub fn pair_params(a: GazePrediction, b: GazePrediction) -> [f64; 6] {
    let [pa, ya, sa] = a.to_array();
    let [pb, yb, sb] = b.to_array();
    [pa, ya, sa, pb, yb, sb]
}

const ANGLE_INDICES: [(usize, usize, Quantity); 4] =
    [(0, 0, Quantity::Pitch), (1, 0, Quantity::Yaw), (3, 1, Quantity::Pitch), (4, 1, Quantity::Yaw)];

fn pair_loss(
    geo: &PairGeometry,
    a: GazePrediction,
    b: GazePrediction,
    kind: PairKind,
) -> Result<LossOutput, LossError> {
    let faces = match &kind {
        PairKind::Pseudo(t) => t.learners(),
        _ => &[0, 1],
    };
    let params = pair_params(a, b);
    let chosen: Vec<_> = ANGLE_INDICES.iter().filter(|(_, f, _)| faces.contains(f)).collect();
    let wrt: Vec<usize> = chosen.iter().map(|(i, _, _)| *i).collect();
    let keys: Vec<GradKey> = chosen.iter().map(|(_, f, q)| GradKey::new(*f, false, *q)).collect();
    let (value, grads) = partials(&PairObjective { geo, kind }, &params, &wrt)?;
    Ok(LossOutput::from_partials(value, &keys, &grads))
}

/// `2·log σ̂ + (|Δθ| + |Δφ|)/σ̂` with hand-derived partials.
pub fn aleatoric_loss(pred: GazePrediction, gt: GazeAngles) -> LossOutput {
    let dp = pred.angles.pitch - gt.pitch;
    let dy = pred.angles.yaw - gt.yaw;
    let inv = (-pred.log_sigma).exp();
    let residual = dp.abs() + dy.abs();
    let sign = |x: f64| if x == 0.0 { 0.0 } else { x.signum() };
    LossOutput {
        value: 2.0 * pred.log_sigma + residual * inv,
        grads: [
            (GradKey::new(0, false, Quantity::Pitch), sign(dp) * inv),
            (GradKey::new(0, false, Quantity::Yaw), sign(dy) * inv),
            (GradKey::new(0, false, Quantity::LogSigma), 2.0 - residual * inv),
        ]
        .into(),
    }
}

/// Same loss with partials from the dual-number engine.
pub fn aleatoric_loss_dual(pred: GazePrediction, gt: GazeAngles) -> Result<LossOutput, LossError> {
    let keys: Vec<GradKey> = Quantity::ALL.iter().map(|&q| GradKey::new(0, false, q)).collect();
    let (value, grads) = partials(&Aleatoric(gt), &pred.to_array(), &[0, 1, 2])?;
    Ok(LossOutput::from_partials(value, &keys, &grads))
}

/// Mirror-consistency loss on face 0: keys with `mirrored = false` belong to
/// the original prediction and `mirrored = true` to the mirrored one.
pub fn symmetry_loss(original: GazePrediction, mirrored: GazePrediction) -> Result<LossOutput, LossError> {
    let params = pair_params(original, mirrored);
    let keys: Vec<GradKey> =
        [false, true].iter().flat_map(|&m| Quantity::ALL.iter().map(move |&q| GradKey::new(0, m, q))).collect();
    let (value, grads) = partials(&Symmetry::at(original, mirrored), &params, &[0, 1, 2, 3, 4, 5])?;
    Ok(LossOutput::from_partials(value, &keys, &grads))
}

/// Projected gaze of each subject against the image line joining the two
/// 2D cyclopean eyes; faces 0 and 1 are subjects A and B.
pub fn geom2d_loss(geo: &PairGeometry, a: GazePrediction, b: GazePrediction) -> Result<LossOutput, LossError> {
    pair_loss(geo, a, b, PairKind::Geom2d)
}

/// Distance between where each predicted gaze ray meets the other subject's
/// face plane and that subject's 3D cyclopean eye.
pub fn geom3d_loss(
    geo: &PairGeometry,
    a: GazePrediction,
    b: GazePrediction,
    scale: Geom3dScale,
) -> Result<LossOutput, LossError> {
    pair_loss(geo, a, b, PairKind::Geom3dPlane(scale))
}

/// Cosine distance between each predicted gaze and the 3D eye line.
pub fn geom3d_cosine_variant(
    geo: &PairGeometry,
    a: GazePrediction,
    b: GazePrediction,
) -> Result<LossOutput, LossError> {
    pair_loss(geo, a, b, PairKind::Geom3dCosine)
}

/// Self-training against a pseudo target built from both predictions.
pub fn pseudo_gaze_loss(
    geo: &PairGeometry,
    a: GazePrediction,
    b: GazePrediction,
    mode: PseudoMode,
) -> Result<LossOutput, LossError> {
    pair_loss(geo, a, b, PairKind::Pseudo(PseudoTarget::at(geo, a, b, mode)?))
}

/// One mutual-gaze component for a pair, as configured by `weights`.
pub fn laeo_component_loss(
    geo: &PairGeometry,
    a: GazePrediction,
    b: GazePrediction,
    component: LaeoComponent,
    weights: &LossWeights,
) -> Result<LossOutput, LossError> {
    pair_loss(geo, a, b, PairKind::configured(component, weights, geo, a, b)?)
}

#[cfg(test)]
mod tests;
