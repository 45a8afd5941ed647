//! Fixed-width per-face feature vectors standing in for head crops.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::{angle_between, camera_to_normalized, normalized_frame, GazeAngles, GeometryError};
use crate::scene::SubjectObservation;

/// Layout: heading in the eye-normalized frame (3), noisy gaze cue pitch and
/// yaw, cue noise level in radians, eye position `(X/Z, Y/Z)` (2), mirror flag.
pub const FEATURE_WIDTH: usize = 9;
pub const HEADING_X: usize = 0;
pub const CUE_PITCH: usize = 3;
pub const CUE_YAW: usize = 4;
pub const CUE_NOISE: usize = 5;
pub const EYE_X: usize = 6;
pub const MIRROR_FLAG: usize = 8;

/// Components that change sign under a horizontal image flip.
pub const YAW_ODD: [usize; 3] = [HEADING_X, CUE_YAW, EYE_X];

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn width(&self) -> usize {
        self.0.len()
    }

    /// Features of the horizontally flipped image: yaw-odd components are
    /// negated and the mirror flag is toggled.
    pub fn mirrored(&self) -> Self {
        let mut v = self.0.clone();
        for &i in &YAW_ODD {
            if let Some(x) = v.get_mut(i) {
                *x = -*x;
            }
        }
        if let Some(f) = v.get_mut(MIRROR_FLAG) {
            *f = 1.0 - *f;
        }
        Self(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Noise on the gaze cue. The standard deviation grows with how far the face
/// is turned from the camera: `min + (max − min)·(ψ/π)²` for heading angle ψ
/// away from the camera.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CueNoise {
    pub min_deg: f64,
    pub max_deg: f64,
}

impl CueNoise {
    pub fn homoscedastic(deg: f64) -> Self {
        Self { min_deg: deg, max_deg: deg }
    }

    pub fn sigma_rad(&self, frontal_angle: f64) -> f64 {
        let t = (frontal_angle / std::f64::consts::PI).clamp(0.0, 1.0);
        (self.min_deg + (self.max_deg - self.min_deg) * t * t).to_radians()
    }
}

impl Default for CueNoise {
    fn default() -> Self {
        Self { min_deg: 2.0, max_deg: 30.0 }
    }
}

/// Two independent observations of one face. The second is consumed
/// through its mirror image by the symmetry loss.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceFeatures {
    pub primary: FeatureVector,
    pub alternate: FeatureVector,
    pub cue_sigma: f64,
}

/// Angle between a subject's heading and the direction to the camera.
pub fn frontal_angle(subject: &SubjectObservation) -> f64 {
    angle_between(subject.heading.as_vec(), -subject.cyclopean_3d)
}

/// Build features from a subject's observed geometry. The cue is the true
/// gaze plus Gaussian noise, expressed in the observed eye-normalized frame.
pub fn face_features(
    subject: &SubjectObservation,
    noise: &CueNoise,
    rng: &mut impl Rng,
) -> Result<FaceFeatures, GeometryError> {
    let eye = subject.cyclopean_3d;
    let r = normalized_frame(eye)?;
    let heading = r.mul_vec(subject.heading.as_vec());
    let truth = match subject.gt_direction() {
        Some(g) => camera_to_normalized(eye, g)?,
        None => GazeAngles::new(0.0, 0.0),
    };
    let sigma = noise.sigma_rad(frontal_angle(subject));
    let observe = |rng: &mut _| {
        let dp: f64 = StandardNormal.sample(rng);
        let dy: f64 = StandardNormal.sample(rng);
        FeatureVector(vec![
            heading.x,
            heading.y,
            heading.z,
            truth.pitch + sigma * dp,
            truth.yaw + sigma * dy,
            sigma,
            eye.x / eye.z,
            eye.y / eye.z,
            0.0,
        ])
    };
    let primary = observe(rng);
    let alternate = observe(rng);
    Ok(FaceFeatures { primary, alternate, cue_sigma: sigma })
}
