//! Multi-view mutual-gaze labeling: the per-view angular test, the view
//! vote across cameras, and the face/body occlusion filter.

pub mod io;
mod synth;

pub use synth::{
    detection_metrics, noise_recall_study, synth_multiview, DetectionMetrics, MultiViewConfig, MultiViewFrame,
};

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

use crate::geometry::{angle_between, Mat3, UnitVec3, Vec3};
use crate::scene::{Box2, SceneError};

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error("view {view_id}: expected {expected} subjects, found {found}")]
    SubjectCount { view_id: String, expected: usize, found: usize },
    #[error("view {view_id}: {reason}")]
    InvalidView { view_id: String, reason: String },
    #[error("invalid detector setting: {0}")]
    InvalidSetting(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

pub const DEFAULT_THRESHOLD_DEG: f64 = 20.0;
pub const DEFAULT_MIN_VIEWS: usize = 4;
pub const DEFAULT_IOU_THRESHOLD: f64 = 0.01;

/// One subject as estimated from one camera.
#[derive(Clone, Debug, PartialEq)]
pub struct SubjectView {
    /// Estimated gaze in this camera's frame.
    pub gaze: UnitVec3<f64>,
    /// Cyclopean eye in the shared world frame (mm).
    pub eye_world: Vec3<f64>,
    /// Angle between the face heading and the reversed principal axis; 0
    /// when the face looks straight into the camera.
    pub frontalness_rad: f64,
    pub face_box: Option<Box2>,
    pub body_box: Option<Box2>,
}

impl SubjectView {
    pub fn is_frontal(&self) -> bool {
        self.frontalness_rad <= FRAC_PI_2
    }
}

/// Every subject of a frame as seen from one camera; `None` where the
/// subject is not visible.
#[derive(Clone, Debug, PartialEq)]
pub struct ViewEstimate {
    pub view_id: String,
    /// Rotation taking world directions into this camera's frame.
    pub world_to_camera: Mat3<f64>,
    pub subjects: Vec<Option<SubjectView>>,
}

impl ViewEstimate {
    pub fn validate(&self, n_subjects: usize) -> Result<(), AnnotateError> {
        let invalid =
            |reason: &str| AnnotateError::InvalidView { view_id: self.view_id.clone(), reason: reason.into() };
        if self.subjects.len() != n_subjects {
            return Err(AnnotateError::SubjectCount {
                view_id: self.view_id.clone(),
                expected: n_subjects,
                found: self.subjects.len(),
            });
        }
        if self.world_to_camera.orthonormality_error() > 1e-6 || self.world_to_camera.determinant() < 0.0 {
            return Err(invalid("world_to_camera is not a rotation"));
        }
        for s in self.subjects.iter().flatten() {
            if (s.gaze.as_vec().norm() - 1.0).abs() > 1e-9 {
                return Err(invalid("gaze is not unit length"));
            }
            if !s.eye_world.is_finite() || !s.frontalness_rad.is_finite() {
                return Err(invalid("non-finite subject estimate"));
            }
        }
        Ok(())
    }

    /// Gaze of subject `i` rotated into the world frame.
    pub fn world_gaze(&self, i: usize) -> Option<Vec3<f64>> {
        let s = self.subjects.get(i)?.as_ref()?;
        Some(self.world_to_camera.transpose().mul_vec(s.gaze.as_vec()))
    }
}

/// True iff both gazes oppose each other and each points along the eye
/// line toward the other, all within `threshold_deg`. Coincident eyes never
/// pass.
pub fn laeo_test(gaze_a: Vec3<f64>, gaze_b: Vec3<f64>, eye_a: Vec3<f64>, eye_b: Vec3<f64>, threshold_deg: f64) -> bool {
    let line = eye_b - eye_a;
    if !(line.norm() > 0.0) {
        return false;
    }
    let t = threshold_deg.to_radians();
    angle_between(gaze_a, -gaze_b) < t && angle_between(gaze_a, line) < t && angle_between(gaze_b, -line) < t
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OcclusionDecision {
    Keep,
    Discard,
}

/// Discard a face whose box is empty or overlaps any other subject's body
/// box with IOU at or above `iou_threshold`.
pub fn occlusion_filter(face_box: &Box2, other_body_boxes: &[Box2], iou_threshold: f64) -> OcclusionDecision {
    if !(face_box.area() > 0.0) || other_body_boxes.iter().any(|b| face_box.iou(b) >= iou_threshold) {
        OcclusionDecision::Discard
    } else {
        OcclusionDecision::Keep
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorConfig {
    pub threshold_deg: f64,
    pub min_views: usize,
    pub iou_threshold: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            threshold_deg: DEFAULT_THRESHOLD_DEG,
            min_views: DEFAULT_MIN_VIEWS,
            iou_threshold: DEFAULT_IOU_THRESHOLD,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), AnnotateError> {
        if !(self.threshold_deg > 0.0 && self.threshold_deg <= 180.0) {
            return Err(AnnotateError::InvalidSetting(format!("threshold_deg = {}", self.threshold_deg)));
        }
        if self.min_views == 0 {
            return Err(AnnotateError::InvalidSetting("min_views must be at least 1".into()));
        }
        if !(self.iou_threshold > 0.0 && self.iou_threshold <= 1.0) {
            return Err(AnnotateError::InvalidSetting(format!("iou_threshold = {}", self.iou_threshold)));
        }
        Ok(())
    }
}

/// Vote of one subject pair across the views of a frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairVote {
    pub a: usize,
    pub b: usize,
    /// Views where both subjects are frontal and unoccluded.
    pub eligible_views: usize,
    pub passing_views: usize,
    pub laeo: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameStatus {
    Detected { a: usize, b: usize },
    DiscardedNone,
    DiscardedMultiple,
}

impl FrameStatus {
    pub fn name(self) -> &'static str {
        match self {
            FrameStatus::Detected { .. } => "detected",
            FrameStatus::DiscardedNone => "discarded_none",
            FrameStatus::DiscardedMultiple => "discarded_multiple",
        }
    }

    pub fn pair(self) -> Option<(usize, usize)> {
        match self {
            FrameStatus::Detected { a, b } => Some((a, b)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameDecision {
    pub votes: Vec<PairVote>,
    pub status: FrameStatus,
}

/// Whether subject `i` of `view` may vote: visible, frontal and, when boxes
/// are present, not overlapped by another subject's body.
fn usable(view: &ViewEstimate, i: usize, iou_threshold: f64) -> bool {
    let Some(Some(s)) = view.subjects.get(i) else {
        return false;
    };
    if !s.is_frontal() {
        return false;
    }
    let Some(face) = &s.face_box else {
        return true;
    };
    let others: Vec<Box2> = view
        .subjects
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .filter_map(|(_, o)| o.as_ref().and_then(|o| o.body_box))
        .collect();
    occlusion_filter(face, &others, iou_threshold) == OcclusionDecision::Keep
}

/// Label a frame: a subject pair is in mutual gaze when [`laeo_test`]
/// passes in at least `min_views` views where both are usable. Frames with
/// no such pair or with several are discarded.
pub fn detect_laeo_pair(
    views: &[ViewEstimate],
    n_subjects: usize,
    config: &DetectorConfig,
) -> Result<FrameDecision, AnnotateError> {
    config.validate()?;
    for v in views {
        v.validate(n_subjects)?;
    }
    let usable: Vec<Vec<bool>> =
        views.iter().map(|v| (0..n_subjects).map(|i| usable(v, i, config.iou_threshold)).collect()).collect();
    let mut votes = Vec::new();
    for a in 0..n_subjects {
        for b in a + 1..n_subjects {
            let mut vote = PairVote { a, b, eligible_views: 0, passing_views: 0, laeo: false };
            for (v, ok) in views.iter().zip(&usable) {
                if !(ok[a] && ok[b]) {
                    continue;
                }
                vote.eligible_views += 1;
                let (Some(ga), Some(gb)) = (v.world_gaze(a), v.world_gaze(b)) else {
                    continue;
                };
                let eye = |i: usize| v.subjects[i].as_ref().map(|s| s.eye_world).unwrap_or_default();
                if laeo_test(ga, gb, eye(a), eye(b), config.threshold_deg) {
                    vote.passing_views += 1;
                }
            }
            vote.laeo = vote.passing_views >= config.min_views;
            votes.push(vote);
        }
    }
    let detected: Vec<&PairVote> = votes.iter().filter(|v| v.laeo).collect();
    let status = match detected.as_slice() {
        [] => FrameStatus::DiscardedNone,
        [v] => FrameStatus::Detected { a: v.a, b: v.b },
        _ => FrameStatus::DiscardedMultiple,
    };
    Ok(FrameDecision { votes, status })
}
