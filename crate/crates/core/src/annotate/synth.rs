//! Synthetic multi-camera frames with one constructed mutual-gaze pair.
//!
//! World frame: `y` points down, cameras sit on a horizontal arc at head
//! height on the `−z` side of the scene and look at the origin. The pair's
//! heads are turned toward the arc while their eyes hold mutual gaze, so
//! both faces are frontal to the central cameras.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{detect_laeo_pair, usable, AnnotateError, DetectorConfig, FrameDecision, SubjectView, ViewEstimate};
use crate::geometry::{angle_between, project, CameraIntrinsics, Mat3, UnitVec3, Vec2, Vec3};
use crate::scene::{derive_seed, Box2, SceneError};

#[derive(Clone, Debug, PartialEq)]
pub struct MultiViewConfig {
    pub n_subjects: usize,
    pub n_views: usize,
    pub arc_half_angle_deg: f64,
    pub rig_radius_mm: f64,
    pub separation_mm: (f64, f64),
    /// Head rotation toward the camera arc, away from the gaze direction.
    pub head_turn_deg: (f64, f64),
    /// Per-axis standard deviation of the per-view gaze estimate error.
    pub gaze_noise_deg: f64,
    pub camera: CameraIntrinsics,
    /// Non-mutual pairs must miss the rule by at least this much.
    pub negative_margin_deg: f64,
    pub detector: DetectorConfig,
    pub max_retries: usize,
}

impl Default for MultiViewConfig {
    fn default() -> Self {
        Self {
            n_subjects: 3,
            n_views: 8,
            arc_half_angle_deg: 45.0,
            rig_radius_mm: 3500.0,
            separation_mm: (900.0, 1800.0),
            head_turn_deg: (35.0, 45.0),
            gaze_noise_deg: 0.0,
            camera: CameraIntrinsics::new(1400.0, Vec2::new(960.0, 540.0), Vec2::new(1920.0, 1080.0))
                .expect("valid default camera"),
            negative_margin_deg: 15.0,
            detector: DetectorConfig::default(),
            max_retries: 1000,
        }
    }
}

impl MultiViewConfig {
    pub fn validate(&self) -> Result<(), AnnotateError> {
        let bad = |m: String| AnnotateError::InvalidSetting(m);
        if self.n_subjects < 2 {
            return Err(bad(format!("n_subjects = {} (need at least 2)", self.n_subjects)));
        }
        if self.n_views == 0 {
            return Err(bad("n_views must be positive".into()));
        }
        if !(self.gaze_noise_deg >= 0.0 && self.gaze_noise_deg.is_finite()) {
            return Err(bad(format!("gaze_noise_deg = {}", self.gaze_noise_deg)));
        }
        let (lo, hi) = self.separation_mm;
        if !(lo > 0.0 && hi >= lo) {
            return Err(bad(format!("separation range ({lo}, {hi})")));
        }
        self.camera.validate().map_err(SceneError::from)?;
        self.detector.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiViewFrame {
    pub frame_id: String,
    pub n_subjects: usize,
    pub views: Vec<ViewEstimate>,
    /// Constructed mutual-gaze pair, when known.
    pub truth: Option<(usize, usize)>,
}

impl MultiViewFrame {
    pub fn detect(&self, config: &DetectorConfig) -> Result<FrameDecision, AnnotateError> {
        detect_laeo_pair(&self.views, self.n_subjects, config)
    }
}

struct Layout {
    eyes: Vec<Vec3<f64>>,
    gazes: Vec<Vec3<f64>>,
    headings: Vec<Vec3<f64>>,
}

fn unit(v: Vec3<f64>) -> Vec3<f64> {
    v.scale(1.0 / v.norm())
}

fn uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Rotate unit `g` by `angle` toward `toward` (which must not be parallel).
fn turn(g: Vec3<f64>, toward: Vec3<f64>, angle: f64) -> Vec3<f64> {
    let perp = unit(toward - g.scale(toward.dot(g)));
    g.scale(angle.cos()) + perp.scale(angle.sin())
}

const FRONT: Vec3<f64> = Vec3 { x: 0.0, y: 0.0, z: -1.0 };

fn draw_layout(config: &MultiViewConfig, rng: &mut impl Rng) -> Layout {
    let mid = Vec3::new(uniform(rng, (-300.0, 300.0)), 0.0, uniform(rng, (-300.0, 300.0)));
    let gamma = uniform(rng, (-25f64.to_radians(), 25f64.to_radians()));
    let u = Vec3::new(gamma.cos(), 0.0, gamma.sin());
    let sep = uniform(rng, config.separation_mm);
    let mut eyes = vec![
        mid - u.scale(sep / 2.0) + Vec3::new(0.0, uniform(rng, (-80.0, 80.0)), 0.0),
        mid + u.scale(sep / 2.0) + Vec3::new(0.0, uniform(rng, (-80.0, 80.0)), 0.0),
    ];
    let g = unit(eyes[1] - eyes[0]);
    let mut gazes = vec![g, -g];
    let (t0, t1) = (config.head_turn_deg.0.to_radians(), config.head_turn_deg.1.to_radians());
    let mut headings = gazes.iter().map(|&g| turn(g, FRONT, uniform(rng, (t0, t1)))).collect::<Vec<_>>();
    for _ in 2..config.n_subjects {
        let r = uniform(rng, (900.0, 1600.0));
        let a = rng.random_range(0.0..std::f64::consts::TAU);
        let eye = mid + Vec3::new(r * a.cos(), uniform(rng, (-80.0, 80.0)), r * a.sin());
        let target = match rng.random_range(0..3) {
            0 => eyes[0],
            1 => eyes[1],
            _ => mid + Vec3::new(uniform(rng, (-1500.0, 1500.0)), 900.0, uniform(rng, (-1500.0, 1500.0))),
        };
        let gaze = unit(target - eye);
        let heading = if gaze.dot(FRONT).abs() > 0.999 { gaze } else { turn(gaze, FRONT, uniform(rng, (0.0, t1))) };
        eyes.push(eye);
        gazes.push(gaze);
        headings.push(heading);
    }
    Layout { eyes, gazes, headings }
}

/// Every non-constructed pair misses the rule by the configured margin.
fn negatives_are_clear(config: &MultiViewConfig, layout: &Layout) -> bool {
    let threshold = config.detector.threshold_deg + config.negative_margin_deg;
    for a in 0..layout.eyes.len() {
        for b in a + 1..layout.eyes.len() {
            if (a, b) == (0, 1) {
                continue;
            }
            let line = layout.eyes[b] - layout.eyes[a];
            if line.norm() < 600.0 {
                return false;
            }
            let (ga, gb) = (layout.gazes[a], layout.gazes[b]);
            let worst = angle_between(ga, -gb).max(angle_between(ga, line)).max(angle_between(gb, -line));
            if worst.to_degrees() < threshold {
                return false;
            }
        }
    }
    true
}

struct Rig {
    position: Vec3<f64>,
    rotation: Mat3<f64>,
}

fn rig(config: &MultiViewConfig) -> Vec<Rig> {
    let half = config.arc_half_angle_deg.to_radians();
    (0..config.n_views)
        .map(|k| {
            let beta =
                if config.n_views == 1 { 0.0 } else { -half + 2.0 * half * k as f64 / (config.n_views - 1) as f64 };
            let position = Vec3::new(beta.sin(), 0.0, -beta.cos()).scale(config.rig_radius_mm);
            let z = unit(-position);
            let down = Vec3::new(0.0, 1.0, 0.0);
            let y = unit(down - z.scale(down.dot(z)));
            let x = y.cross(z);
            Rig { position, rotation: Mat3::from_rows([x.to_array(), y.to_array(), z.to_array()]) }
        })
        .collect()
}

/// Tilt unit `g` by a 2D Gaussian offset in its tangent plane.
fn perturb(g: Vec3<f64>, sigma: f64, n: [f64; 2]) -> Vec3<f64> {
    let helper = if g.x.abs() < 0.9 { Vec3::new(1.0, 0.0, 0.0) } else { Vec3::new(0.0, 1.0, 0.0) };
    let e1 = unit(g.cross(helper));
    let e2 = g.cross(e1);
    let (dx, dy) = (sigma * n[0], sigma * n[1]);
    let delta = dx.hypot(dy);
    if delta == 0.0 {
        return g;
    }
    let dir = e1.scale(dx / delta) + e2.scale(dy / delta);
    unit(g.scale(delta.cos()) + dir.scale(delta.sin()))
}

fn observe(config: &MultiViewConfig, layout: &Layout, rigs: &[Rig], noise_rng: &mut impl Rng) -> Vec<ViewEstimate> {
    let sigma = config.gaze_noise_deg.to_radians();
    rigs.iter()
        .enumerate()
        .map(|(k, cam)| {
            let r = &cam.rotation;
            let back = -Vec3::new(r.rows[2][0], r.rows[2][1], r.rows[2][2]);
            let subjects = (0..layout.eyes.len())
                .map(|i| {
                    // drawn for every subject and view so all noise levels
                    // share the same underlying numbers
                    let n = [noise_rng.sample(StandardNormal), noise_rng.sample(StandardNormal)];
                    let c = r.mul_vec(layout.eyes[i] - cam.position);
                    let q = project(c, &config.camera).ok().filter(|q| config.camera.contains(*q))?;
                    let gaze = perturb(r.mul_vec(layout.gazes[i]), sigma, n);
                    let px_per_mm = config.camera.focal_px / c.z;
                    Some(SubjectView {
                        gaze: UnitVec3::new_unchecked(gaze),
                        eye_world: layout.eyes[i],
                        frontalness_rad: angle_between(layout.headings[i], back),
                        face_box: Some(Box2::from_center(q, 180.0 * px_per_mm, 230.0 * px_per_mm)),
                        body_box: Some(Box2::new(
                            Vec2::new(q.x - 250.0 * px_per_mm, q.y - 130.0 * px_per_mm),
                            Vec2::new(q.x + 250.0 * px_per_mm, q.y + 1600.0 * px_per_mm),
                        )),
                    })
                })
                .collect();
            ViewEstimate { view_id: format!("cam{k:02}"), world_to_camera: *r, subjects }
        })
        .collect()
}

/// Generate one frame whose subjects 0 and 1 hold mutual gaze. Layouts are
/// redrawn until every other pair clearly fails the rule and the pair is
/// frontal and unoccluded in at least `detector.min_views` views.
pub fn synth_multiview(config: &MultiViewConfig, seed: u64) -> Result<MultiViewFrame, AnnotateError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rigs = rig(config);
    let clean = MultiViewConfig { gaze_noise_deg: 0.0, ..config.clone() };
    for attempt in 0..config.max_retries {
        let layout = draw_layout(config, &mut rng);
        if !negatives_are_clear(config, &layout) {
            continue;
        }
        let mut noise_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, attempt as u64));
        let views = observe(&clean, &layout, &rigs, &mut noise_rng);
        let observable = views
            .iter()
            .filter(|v| usable(v, 0, config.detector.iou_threshold) && usable(v, 1, config.detector.iou_threshold))
            .count();
        if observable < config.detector.min_views {
            continue;
        }
        let views = if config.gaze_noise_deg > 0.0 {
            let mut noise_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, attempt as u64));
            observe(config, &layout, &rigs, &mut noise_rng)
        } else {
            views
        };
        return Ok(MultiViewFrame {
            frame_id: format!("multiview-{seed:016x}"),
            n_subjects: config.n_subjects,
            views,
            truth: Some((0, 1)),
        });
    }
    Err(SceneError::InfeasiblePlacement { attempts: config.max_retries }.into())
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DetectionMetrics {
    pub frames: usize,
    pub detected: usize,
    pub true_positives: usize,
    pub discarded_none: usize,
    pub discarded_multiple: usize,
    /// Correct detections over detections; 1 when nothing was detected.
    pub precision: f64,
    /// Correct detections over frames with a known pair.
    pub recall: f64,
}

pub fn detection_metrics(frames: &[MultiViewFrame], decisions: &[FrameDecision]) -> DetectionMetrics {
    let mut m = DetectionMetrics { frames: frames.len(), ..Default::default() };
    let mut positives = 0;
    for (f, d) in frames.iter().zip(decisions) {
        positives += usize::from(f.truth.is_some());
        match d.status.pair() {
            Some(p) => {
                m.detected += 1;
                m.true_positives += usize::from(f.truth == Some(p));
            }
            None if d.status == super::FrameStatus::DiscardedNone => m.discarded_none += 1,
            None => m.discarded_multiple += 1,
        }
    }
    m.precision = if m.detected == 0 { 1.0 } else { m.true_positives as f64 / m.detected as f64 };
    m.recall = if positives == 0 { 1.0 } else { m.true_positives as f64 / positives as f64 };
    m
}

/// Detection quality on the same `n_frames` layouts at each gaze noise level.
pub fn noise_recall_study(
    config: &MultiViewConfig,
    sigmas_deg: &[f64],
    n_frames: usize,
    seed: u64,
) -> Result<Vec<(f64, DetectionMetrics)>, AnnotateError> {
    sigmas_deg
        .iter()
        .map(|&sigma| {
            let cfg = MultiViewConfig { gaze_noise_deg: sigma, ..config.clone() };
            let frames = (0..n_frames as u64)
                .map(|i| synth_multiview(&cfg, derive_seed(seed, i)))
                .collect::<Result<Vec<_>, _>>()?;
            let decisions = frames.iter().map(|f| f.detect(&cfg.detector)).collect::<Result<Vec<_>, _>>()?;
            Ok((sigma, detection_metrics(&frames, &decisions)))
        })
        .collect()
}
