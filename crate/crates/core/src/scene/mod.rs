//! Subjects, mutual-gaze pairs and datasets; synthetic scene generation,
//! geometry noise and the label-reliability study.

pub mod io;
mod study;

pub use study::{eye_center_assumption_error, label_error_study, standard_ladder, LabelStudyConfig, LabelStudyRow};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::geometry::{
    self, approximate_intrinsics, backproject, cyclopean_eye_2d, project, CameraIntrinsics, GazeAngles, GeometryError,
    UnitVec3, Vec2, Vec3,
};
use crate::trainer::FeatureVector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("no feasible subject placement after {attempts} attempts")]
    InfeasiblePlacement { attempts: usize },
    #[error("invalid subject: {0}")]
    InvalidSubject(String),
    #[error("invalid pair {frame_id}: {reason}")]
    InvalidPair { frame_id: String, reason: String },
}

/// Axis-aligned box in principal-point-centered pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Box2 {
    pub min: Vec2<f64>,
    pub max: Vec2<f64>,
}

impl Box2 {
    pub fn new(min: Vec2<f64>, max: Vec2<f64>) -> Self {
        Self { min, max }
    }

    pub fn from_center(center: Vec2<f64>, width: f64, height: f64) -> Self {
        let h = Vec2::new(width / 2.0, height / 2.0);
        Self::new(center - h, center + h)
    }

    pub fn area(&self) -> f64 {
        (self.max.x - self.min.x).max(0.0) * (self.max.y - self.min.y).max(0.0)
    }

    pub fn intersection_area(&self, o: &Box2) -> f64 {
        let w = self.max.x.min(o.max.x) - self.min.x.max(o.min.x);
        let h = self.max.y.min(o.max.y) - self.min.y.max(o.min.y);
        w.max(0.0) * h.max(0.0)
    }

    /// Intersection over union; 0 when both boxes are empty.
    pub fn iou(&self, o: &Box2) -> f64 {
        let inter = self.intersection_area(o);
        let union = self.area() + o.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
}

/// One subject as seen in a single camera frame.
#[derive(Clone, Debug, PartialEq)]
pub struct SubjectObservation {
    pub left_eye_2d: Vec2<f64>,
    pub right_eye_2d: Vec2<f64>,
    pub cyclopean_2d: Vec2<f64>,
    pub depth_mm: f64,
    pub cyclopean_3d: Vec3<f64>,
    pub heading: UnitVec3<f64>,
    pub head_box: Box2,
    pub body_box: Box2,
    /// Ground-truth gaze in camera coordinates, when known.
    pub gt_gaze: Option<GazeAngles>,
}

impl SubjectObservation {
    /// Build from measured quantities; the cyclopean points are derived.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        left_eye_2d: Vec2<f64>,
        right_eye_2d: Vec2<f64>,
        depth_mm: f64,
        heading: UnitVec3<f64>,
        head_box: Box2,
        body_box: Box2,
        gt_gaze: Option<GazeAngles>,
        camera: &CameraIntrinsics,
    ) -> Result<Self, SceneError> {
        let cyclopean_2d = cyclopean_eye_2d(left_eye_2d, right_eye_2d);
        let cyclopean_3d = backproject(cyclopean_2d, depth_mm, camera)?;
        let s = Self {
            left_eye_2d,
            right_eye_2d,
            cyclopean_2d,
            depth_mm,
            cyclopean_3d,
            heading,
            head_box,
            body_box,
            gt_gaze,
        };
        s.validate(camera)?;
        Ok(s)
    }

    /// Recompute the derived cyclopean points after editing eyes or depth.
    pub fn rederive(&mut self, camera: &CameraIntrinsics) -> Result<(), SceneError> {
        self.cyclopean_2d = cyclopean_eye_2d(self.left_eye_2d, self.right_eye_2d);
        self.cyclopean_3d = backproject(self.cyclopean_2d, self.depth_mm, camera)?;
        Ok(())
    }

    pub fn validate(&self, camera: &CameraIntrinsics) -> Result<(), SceneError> {
        if !(self.depth_mm.is_finite() && self.depth_mm > 0.0) {
            return Err(SceneError::InvalidSubject(format!("depth {} mm is not positive", self.depth_mm)));
        }
        if !(self.left_eye_2d.is_finite() && self.right_eye_2d.is_finite()) {
            return Err(SceneError::InvalidSubject("eye position is not finite".into()));
        }
        let h = self.heading.as_vec();
        if !h.is_finite() || (h.norm() - 1.0).abs() > 1e-6 {
            return Err(SceneError::InvalidSubject("heading is not a unit vector".into()));
        }
        if let Some(g) = self.gt_gaze {
            if !(g.pitch.is_finite() && g.yaw.is_finite()) {
                return Err(SceneError::InvalidSubject("ground-truth gaze is not finite".into()));
            }
        }
        let mid = cyclopean_eye_2d(self.left_eye_2d, self.right_eye_2d);
        if mid != self.cyclopean_2d {
            return Err(SceneError::InvalidSubject("2D cyclopean eye is not the midpoint of the eyes".into()));
        }
        let p = backproject(self.cyclopean_2d, self.depth_mm, camera)?;
        if (p - self.cyclopean_3d).norm() > 1e-9 * p.norm() {
            return Err(SceneError::InvalidSubject("3D cyclopean eye is not the back-projection of the 2D one".into()));
        }
        Ok(())
    }

    /// Ground-truth gaze as a camera-frame direction.
    pub fn gt_direction(&self) -> Option<UnitVec3<f64>> {
        self.gt_gaze.map(geometry::angles_to_vector)
    }
}

/// Two subjects looking at each other in one camera frame.
#[derive(Clone, Debug, PartialEq)]
pub struct LaeoPair {
    pub subject_a: SubjectObservation,
    pub subject_b: SubjectObservation,
    pub camera: CameraIntrinsics,
    pub frame_id: String,
}

impl LaeoPair {
    pub fn validate(&self) -> Result<(), SceneError> {
        let fail = |reason: String| SceneError::InvalidPair { frame_id: self.frame_id.clone(), reason };
        self.camera.validate()?;
        self.subject_a.validate(&self.camera).map_err(|e| fail(format!("subject A: {e}")))?;
        self.subject_b.validate(&self.camera).map_err(|e| fail(format!("subject B: {e}")))?;
        let d = self.separation_mm();
        if !(d > 0.0) {
            return Err(fail("subjects share the same 3D cyclopean eye".into()));
        }
        Ok(())
    }

    pub fn separation_mm(&self) -> f64 {
        (self.subject_b.cyclopean_3d - self.subject_a.cyclopean_3d).norm()
    }

    pub fn subjects(&self) -> [&SubjectObservation; 2] {
        [&self.subject_a, &self.subject_b]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FocalMode {
    Exact,
    MaxImageDim,
}

/// Geometry corruption applied to a pair.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    pub focal_mode: FocalMode,
    pub eye2d_sigma_px: f64,
    /// Zero-mean relative depth noise: `z ← z·(1 + N(0, σ))`, clamped at 1 mm.
    pub depth_rel_sigma: f64,
    /// Offset of the true gaze target from the other subject's eye.
    pub target_offset_mm: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn exact(seed: u64) -> Self {
        Self { focal_mode: FocalMode::Exact, eye2d_sigma_px: 0.0, depth_rel_sigma: 0.0, target_offset_mm: 0.0, seed }
    }

    pub fn depth_only(sigma: f64, seed: u64) -> Self {
        Self { depth_rel_sigma: sigma, ..Self::exact(seed) }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        for (name, v) in [
            ("eye2d_sigma_px", self.eye2d_sigma_px),
            ("depth_rel_sigma", self.depth_rel_sigma),
            ("target_offset_mm", self.target_offset_mm),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(SceneError::InvalidSubject(format!("{name} must be ≥ 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// A supervised face sample with its gaze label in the eye-normalized frame.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    pub id: String,
    pub features: FeatureVector,
    pub gaze: GazeAngles,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SceneDataset {
    pub pairs: Vec<LaeoPair>,
    pub labeled: Vec<LabeledSample>,
    pub provenance: Option<NoiseModel>,
}

impl SceneDataset {
    pub fn from_pairs(pairs: Vec<LaeoPair>) -> Self {
        Self { pairs, ..Self::default() }
    }

    /// Identifiers must be unique across pairs and labeled samples.
    pub fn validate(&self) -> Result<(), SceneError> {
        let mut seen = std::collections::HashSet::new();
        for id in self.pairs.iter().map(|p| p.frame_id.as_str()).chain(self.labeled.iter().map(|s| s.id.as_str())) {
            if !seen.insert(id) {
                return Err(SceneError::InvalidPair {
                    frame_id: id.to_string(),
                    reason: "duplicate identifier".into(),
                });
            }
        }
        self.pairs.iter().try_for_each(LaeoPair::validate)
    }
}

/// Placement distribution for synthetic pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub image_size: Vec2<f64>,
    pub focal_px: f64,
    /// Range of the 3D distance between the two cyclopean eyes.
    pub separation_mm: (f64, f64),
    /// Range of the depth of the pair midpoint.
    pub midpoint_depth_mm: (f64, f64),
    pub lateral_extent_mm: f64,
    pub vertical_extent_mm: f64,
    /// Maximum elevation of the line joining the subjects.
    pub max_elevation_deg: f64,
    /// Maximum angle between a heading and the true gaze.
    pub heading_jitter_deg: f64,
    pub interocular_mm: f64,
    pub min_depth_mm: f64,
    pub max_retries: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            image_size: Vec2::new(1920.0, 1080.0),
            focal_px: 1400.0,
            separation_mm: (500.0, 4000.0),
            midpoint_depth_mm: (2500.0, 6000.0),
            lateral_extent_mm: 800.0,
            vertical_extent_mm: 250.0,
            max_elevation_deg: 10.0,
            heading_jitter_deg: 15.0,
            interocular_mm: 63.0,
            min_depth_mm: 600.0,
            max_retries: 1000,
        }
    }
}

impl SynthConfig {
    pub fn camera(&self) -> CameraIntrinsics {
        CameraIntrinsics {
            focal_px: self.focal_px,
            principal_point: self.image_size.scale(0.5),
            image_size: self.image_size,
        }
    }
}

/// Seed for item `index` of a batch generated from `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    // splitmix64 finalizer over a combined word
    let mut z = master
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit FNV-1a hash, used to key per-pair noise draws.
pub fn stable_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3))
}

fn uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Unit vector perpendicular to `v`, chosen uniformly around it.
pub(crate) fn random_perpendicular(v: Vec3<f64>, rng: &mut impl Rng) -> Vec3<f64> {
    let helper = if v.x.abs() < 0.9 { Vec3::new(1.0, 0.0, 0.0) } else { Vec3::new(0.0, 1.0, 0.0) };
    let e1 = v.cross(helper);
    let e1 = e1.scale(1.0 / e1.norm());
    let e2 = v.cross(e1);
    let a = rng.random_range(0.0..std::f64::consts::TAU);
    e1.scale(a.cos()) + e2.scale(a.sin())
}

/// Rotate unit `v` by `angle` toward the unit perpendicular `perp`.
pub(crate) fn tilt(v: Vec3<f64>, perp: Vec3<f64>, angle: f64) -> Vec3<f64> {
    v.scale(angle.cos()) + perp.scale(angle.sin())
}

/// Generate one mutual-gaze pair. Each subject's true gaze points exactly
/// at the other's 3D cyclopean eye; headings deviate from it by at most the
/// configured jitter.
pub fn synth_scene(config: &SynthConfig, seed: u64) -> Result<LaeoPair, SceneError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let camera = config.camera();
    camera.validate()?;
    let jitter = config.heading_jitter_deg.to_radians();
    let max_elev = config.max_elevation_deg.to_radians();

    for _ in 0..config.max_retries {
        let mid = Vec3::new(
            uniform(&mut rng, (-config.lateral_extent_mm, config.lateral_extent_mm)),
            uniform(&mut rng, (-config.vertical_extent_mm, config.vertical_extent_mm)),
            uniform(&mut rng, config.midpoint_depth_mm),
        );
        let sep = uniform(&mut rng, config.separation_mm);
        let azimuth = rng.random_range(0.0..std::f64::consts::TAU);
        let elevation = uniform(&mut rng, (-max_elev, max_elev));
        let axis = Vec3::new(elevation.cos() * azimuth.sin(), elevation.sin(), elevation.cos() * azimuth.cos());
        let centers = [mid - axis.scale(sep / 2.0), mid + axis.scale(sep / 2.0)];
        if centers.iter().any(|c| c.z < config.min_depth_mm) {
            continue;
        }
        let Ok(subjects) = centers
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let toward = if i == 0 { axis } else { -axis };
                place_subject(config, &camera, c, toward, jitter, &mut rng)
            })
            .collect::<Result<Vec<_>, _>>()
        else {
            continue;
        };
        let [mut a, mut b]: [SubjectObservation; 2] = subjects.try_into().expect("two subjects");
        // aim the ground truth at the derived cyclopean points
        let ab = UnitVec3::normalize(b.cyclopean_3d - a.cyclopean_3d).ok_or(GeometryError::Coincident)?;
        a.gt_gaze = Some(geometry::vector_to_angles(ab));
        b.gt_gaze = Some(geometry::vector_to_angles(-ab));
        let pair = LaeoPair { subject_a: a, subject_b: b, camera, frame_id: format!("scene-{seed:016x}") };
        let sep = pair.separation_mm();
        if sep < config.separation_mm.0 || sep > config.separation_mm.1 {
            continue;
        }
        return Ok(pair);
    }
    Err(SceneError::InfeasiblePlacement { attempts: config.max_retries })
}

fn place_subject(
    config: &SynthConfig,
    camera: &CameraIntrinsics,
    center: Vec3<f64>,
    toward: Vec3<f64>,
    jitter: f64,
    rng: &mut impl Rng,
) -> Result<SubjectObservation, SceneError> {
    let perp = random_perpendicular(toward, rng);
    let heading = tilt(toward, perp, uniform(rng, (0.0, jitter)));
    let heading = UnitVec3::normalize(heading).ok_or(GeometryError::Coincident)?;

    // ear-to-ear axis, horizontal-ish and perpendicular to the heading
    let up = Vec3::new(0.0, -1.0, 0.0);
    let side =
        UnitVec3::normalize(heading.as_vec().cross(up)).map(UnitVec3::as_vec).unwrap_or(Vec3::new(1.0, 0.0, 0.0));
    let half = side.scale(config.interocular_mm / 2.0);
    let q = project(center, camera)?;
    let el = project(center - half, camera)?;
    let er = project(center + half, camera)?;
    let delta = (er - el).scale(0.5);
    let (left, right) = (q - delta, q + delta);
    if !camera.contains(left) || !camera.contains(right) {
        return Err(SceneError::InvalidSubject("eye outside the image".into()));
    }
    let px_per_mm = camera.focal_px / center.z;
    let head_box = Box2::from_center(q, 180.0 * px_per_mm, 230.0 * px_per_mm);
    let body_box = Box2::new(
        Vec2::new(q.x - 250.0 * px_per_mm, q.y - 130.0 * px_per_mm),
        Vec2::new(q.x + 250.0 * px_per_mm, q.y + 1600.0 * px_per_mm),
    );
    SubjectObservation::new(left, right, center.z, heading, head_box, body_box, None, camera)
}

/// Apply a geometry noise model. Draws are keyed by `(noise.seed, frame_id)`
/// and always consumed in the same order, so models that differ only in
/// their magnitudes share the same underlying random numbers.
pub fn corrupt(pair: &LaeoPair, noise: &NoiseModel) -> Result<LaeoPair, SceneError> {
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(noise.seed, stable_hash(&pair.frame_id)));
    let mut out = pair.clone();
    if noise.focal_mode == FocalMode::MaxImageDim {
        let approx = approximate_intrinsics(pair.camera.image_size.x, pair.camera.image_size.y)?;
        out.camera = CameraIntrinsics { principal_point: pair.camera.principal_point, ..approx };
    }
    let camera = out.camera;
    for s in [&mut out.subject_a, &mut out.subject_b] {
        let mut n = || -> f64 { StandardNormal.sample(&mut rng) };
        let jitter = [n(), n(), n(), n()];
        let dz: f64 = n();
        s.left_eye_2d = s.left_eye_2d + Vec2::new(jitter[0], jitter[1]).scale(noise.eye2d_sigma_px);
        s.right_eye_2d = s.right_eye_2d + Vec2::new(jitter[2], jitter[3]).scale(noise.eye2d_sigma_px);
        s.depth_mm = (s.depth_mm * (1.0 + noise.depth_rel_sigma * dz)).max(1.0);
        s.rederive(&camera)?;
    }
    Ok(out)
}

/// Geometry-derived gaze directions in camera coordinates: each subject
/// looks along the 3D line to the other's cyclopean eye.
pub fn derived_gaze_vectors(pair: &LaeoPair) -> Result<(UnitVec3<f64>, UnitVec3<f64>), SceneError> {
    let ab = UnitVec3::normalize(pair.subject_b.cyclopean_3d - pair.subject_a.cyclopean_3d)
        .ok_or(GeometryError::Coincident)?;
    Ok((ab, -ab))
}

/// Geometry-derived gaze labels, each in its subject's eye-normalized frame.
pub fn derived_gaze_label(pair: &LaeoPair) -> Result<(GazeAngles, GazeAngles), SceneError> {
    let (ga, gb) = derived_gaze_vectors(pair)?;
    Ok((
        geometry::camera_to_normalized(pair.subject_a.cyclopean_3d, ga)?,
        geometry::camera_to_normalized(pair.subject_b.cyclopean_3d, gb)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{angle_between, normalized_to_camera};

    #[test]
    fn synthetic_gaze_targets_the_other_eye() {
        let cfg = SynthConfig::default();
        for seed in 0..200 {
            let pair = synth_scene(&cfg, seed).unwrap();
            pair.validate().unwrap();
            let a = &pair.subject_a;
            let b = &pair.subject_b;
            let ga = a.gt_direction().unwrap().as_vec();
            let gb = b.gt_direction().unwrap().as_vec();
            assert!(angle_between(ga, b.cyclopean_3d - a.cyclopean_3d) < 1e-9);
            assert!(angle_between(gb, a.cyclopean_3d - b.cyclopean_3d) < 1e-9);
            // headings within the jitter cone
            assert!(angle_between(a.heading.as_vec(), ga).to_degrees() <= 15.0 + 1e-9);
        }
    }

    #[test]
    fn synthesis_is_deterministic() {
        let cfg = SynthConfig::default();
        assert_eq!(synth_scene(&cfg, 99).unwrap(), synth_scene(&cfg, 99).unwrap());
        assert_ne!(synth_scene(&cfg, 99).unwrap(), synth_scene(&cfg, 100).unwrap());
    }

    #[test]
    fn separation_stays_in_range() {
        let cfg = SynthConfig::default();
        for i in 0..1000 {
            let s = synth_scene(&cfg, derive_seed(5, i)).unwrap().separation_mm();
            assert!((500.0..=4000.0).contains(&s), "{s}");
        }
    }

    #[test]
    fn infeasible_placement_is_rejected() {
        let cfg = SynthConfig { midpoint_depth_mm: (100.0, 200.0), max_retries: 20, ..Default::default() };
        assert_eq!(synth_scene(&cfg, 1), Err(SceneError::InfeasiblePlacement { attempts: 20 }));
    }

    #[test]
    fn zero_noise_is_identity() {
        let pair = synth_scene(&SynthConfig::default(), 3).unwrap();
        assert_eq!(corrupt(&pair, &NoiseModel::exact(8)).unwrap(), pair);
    }

    #[test]
    fn corruption_keeps_backprojection_consistency() {
        let noise = NoiseModel {
            focal_mode: FocalMode::MaxImageDim,
            eye2d_sigma_px: 3.0,
            depth_rel_sigma: 0.5,
            target_offset_mm: 0.0,
            seed: 4,
        };
        for seed in 0..100 {
            let pair = synth_scene(&SynthConfig::default(), seed).unwrap();
            let noisy = corrupt(&pair, &noise).unwrap();
            noisy.validate().unwrap();
            assert_eq!(noisy.camera.focal_px, 1920.0);
            assert_eq!(noisy.subject_a.gt_gaze, pair.subject_a.gt_gaze);
        }
    }

    #[test]
    fn corruption_seeds() {
        let pair = synth_scene(&SynthConfig::default(), 3).unwrap();
        let n1 = NoiseModel { eye2d_sigma_px: 2.0, ..NoiseModel::depth_only(0.2, 1) };
        let n2 = NoiseModel { seed: 2, ..n1.clone() };
        assert_eq!(corrupt(&pair, &n1).unwrap(), corrupt(&pair, &n1).unwrap());
        assert_ne!(corrupt(&pair, &n1).unwrap(), corrupt(&pair, &n2).unwrap());
    }

    #[test]
    fn relative_depth_noise_matches_half_normal_mean() {
        // E|N(0, σ)| = σ·sqrt(2/π)
        let pair = synth_scene(&SynthConfig::default(), 17).unwrap();
        let sigma = 0.3;
        let mut total = 0.0;
        let mut count = 0usize;
        for seed in 0..50_000u64 {
            let noisy = corrupt(&pair, &NoiseModel::depth_only(sigma, seed)).unwrap();
            for (o, n) in [(&pair.subject_a, &noisy.subject_a), (&pair.subject_b, &noisy.subject_b)] {
                total += (n.depth_mm - o.depth_mm).abs() / o.depth_mm;
                count += 1;
            }
        }
        let mean = total / count as f64;
        let expected = sigma * (2.0 / std::f64::consts::PI).sqrt();
        assert!((mean - expected).abs() / expected < 0.02, "{mean} vs {expected}");
    }

    #[test]
    fn derived_labels_recover_ground_truth() {
        for seed in 0..100 {
            let pair = synth_scene(&SynthConfig::default(), seed).unwrap();
            let (la, lb) = derived_gaze_label(&pair).unwrap();
            let va = normalized_to_camera(pair.subject_a.cyclopean_3d, la).unwrap().as_vec();
            let vb = normalized_to_camera(pair.subject_b.cyclopean_3d, lb).unwrap().as_vec();
            assert!(angle_between(va, pair.subject_a.gt_direction().unwrap().as_vec()) < 1e-9);
            assert!(angle_between(vb, pair.subject_b.gt_direction().unwrap().as_vec()) < 1e-9);
            let (ga, gb) = derived_gaze_vectors(&pair).unwrap();
            assert_eq!(ga.as_vec(), -gb.as_vec());
        }
    }

    fn two_subject_pair(a: Vec3<f64>, b: Vec3<f64>) -> LaeoPair {
        let camera = SynthConfig::default().camera();
        let make = |p: Vec3<f64>, h: Vec3<f64>| {
            let q = project(p, &camera).unwrap();
            let d = Vec2::new(10.0, 0.0);
            SubjectObservation::new(
                q - d,
                q + d,
                p.z,
                UnitVec3::normalize(h).unwrap(),
                Box2::from_center(q, 50.0, 60.0),
                Box2::from_center(q, 150.0, 400.0),
                None,
                &camera,
            )
            .unwrap()
        };
        LaeoPair { subject_a: make(a, b - a), subject_b: make(b, a - b), camera, frame_id: "hand".into() }
    }

    #[test]
    fn derived_label_hand_geometry() {
        let pair = two_subject_pair(Vec3::new(0.0, 0.0, 1000.0), Vec3::new(1000.0, 0.0, 1000.0));
        let (ga, _) = derived_gaze_vectors(&pair).unwrap();
        assert!((ga.as_vec() - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn three_d_label_is_sensitive_to_asymmetric_depth_noise() {
        let pair = synth_scene(&SynthConfig::default(), 21).unwrap();
        let (before, _) = derived_gaze_vectors(&pair).unwrap();
        let mut noisy = pair.clone();
        noisy.subject_b.depth_mm *= 1.3;
        noisy.subject_b.rederive(&noisy.camera).unwrap();
        let (after, _) = derived_gaze_vectors(&noisy).unwrap();
        assert!(angle_between(before.as_vec(), after.as_vec()) > 1e-3);
        // while the 2D cyclopean eyes are untouched
        assert_eq!(noisy.subject_b.cyclopean_2d, pair.subject_b.cyclopean_2d);
    }

    #[test]
    fn coincident_eyes_are_rejected() {
        let p = Vec3::new(0.0, 0.0, 1000.0);
        let mut pair = two_subject_pair(p, Vec3::new(500.0, 0.0, 1000.0));
        pair.subject_b = pair.subject_a.clone();
        assert!(derived_gaze_label(&pair).is_err());
        assert!(pair.validate().is_err());
    }

    #[test]
    fn iou_arithmetic() {
        let a = Box2::new(Vec2::new(0.0, 0.0), Vec2::new(10.0, 10.0));
        let b = Box2::new(Vec2::new(9.9, 9.9), Vec2::new(19.9, 19.9));
        let expected = 0.01 / 199.99;
        assert!((a.iou(&b) - expected).abs() < 1e-12);
        let far = Box2::new(Vec2::new(50.0, 50.0), Vec2::new(60.0, 60.0));
        assert_eq!(a.iou(&far), 0.0);
    }
}
