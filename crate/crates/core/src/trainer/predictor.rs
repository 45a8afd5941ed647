//! The toy predictors: free per-sample variables, or a two-hidden-layer tanh
//! network over [`FeatureVector`]s.

use std::f64::consts::FRAC_PI_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{FeatureVector, TrainError};
use crate::grad::Objective;
use crate::losses::GazePrediction;
use crate::scalar::Scalar;

/// Standard deviation of the initial network weights.
pub const INIT_STD: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorMode {
    /// One free `(pitch, yaw, log_sigma)` triple per face.
    Direct { n_faces: usize },
    /// `tanh` hidden layers of width `hidden`.
    Mlp { hidden: usize },
}

/// Parameters stored flat so the optimizer can treat every mode alike.
///
/// Network layout: `W1 (h×d), b1 (h), W2 (h×h), b2 (h), W3 (3×h), b3 (3)`,
/// row-major. Direct layout: `[pitch, yaw, log_sigma]` per face.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictorParams {
    pub mode: PredictorMode,
    pub input_width: usize,
    pub values: Vec<f64>,
}

pub fn parameter_count(mode: PredictorMode, input_width: usize) -> usize {
    match mode {
        PredictorMode::Direct { n_faces } => 3 * n_faces,
        PredictorMode::Mlp { hidden: h } => h * input_width + h + h * h + h + 3 * h + 3,
    }
}

/// Network weights ~ N(0, 0.1²) with zero biases; direct variables start at
/// zero (facing the camera, σ̂ = 1).
pub fn init_predictor(mode: PredictorMode, input_width: usize, seed: u64) -> PredictorParams {
    let n = parameter_count(mode, input_width);
    let values = match mode {
        PredictorMode::Direct { .. } => vec![0.0; n],
        PredictorMode::Mlp { hidden } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let normal = Normal::new(0.0, INIT_STD).expect("valid normal");
            let layout = MlpLayout::new(input_width, hidden);
            let mut v = vec![0.0; n];
            for range in [layout.w1.clone(), layout.w2.clone(), layout.w3.clone()] {
                for x in &mut v[range] {
                    *x = normal.sample(&mut rng);
                }
            }
            v
        }
    };
    PredictorParams { mode, input_width, values }
}

#[derive(Clone, Debug)]
struct MlpLayout {
    d: usize,
    h: usize,
    w1: std::ops::Range<usize>,
    b1: std::ops::Range<usize>,
    w2: std::ops::Range<usize>,
    b2: std::ops::Range<usize>,
    w3: std::ops::Range<usize>,
    b3: std::ops::Range<usize>,
}

impl MlpLayout {
    fn new(d: usize, h: usize) -> Self {
        let mut at = 0;
        let mut take = |n: usize| {
            let r = at..at + n;
            at += n;
            r
        };
        let w1 = take(h * d);
        let b1 = take(h);
        let w2 = take(h * h);
        let b2 = take(h);
        let w3 = take(3 * h);
        let b3 = take(3);
        Self { d, h, w1, b1, w2, b2, w3, b3 }
    }
}

/// Network forward pass on any scalar; the raw outputs before squashing.
fn mlp_raw<T: Scalar>(p: &[T], layout: &MlpLayout, x: &[f64]) -> [T; 3] {
    let MlpLayout { d, h, .. } = *layout;
    let w1 = &p[layout.w1.clone()];
    let b1 = &p[layout.b1.clone()];
    let w2 = &p[layout.w2.clone()];
    let b2 = &p[layout.b2.clone()];
    let w3 = &p[layout.w3.clone()];
    let b3 = &p[layout.b3.clone()];
    let h1: Vec<T> = (0..h)
        .map(|j| {
            let row = &w1[j * d..(j + 1) * d];
            row.iter().zip(x).fold(b1[j], |acc, (&w, &xi)| acc + w * T::of(xi)).tanh()
        })
        .collect();
    let h2: Vec<T> = (0..h)
        .map(|j| {
            let row = &w2[j * h..(j + 1) * h];
            row.iter().zip(&h1).fold(b2[j], |acc, (&w, &a)| acc + w * a).tanh()
        })
        .collect();
    std::array::from_fn(|k| {
        let row = &w3[k * h..(k + 1) * h];
        row.iter().zip(&h2).fold(b3[k], |acc, (&w, &a)| acc + w * a)
    })
}

/// Pitch is squashed into `[−π/2, π/2]`; yaw and log σ are unconstrained.
fn squash<T: Scalar>(raw: [T; 3]) -> GazePrediction<T> {
    GazePrediction::new(T::of(FRAC_PI_2) * raw[0].tanh(), raw[1], raw[2])
}

impl PredictorParams {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn check(&self, face: usize, features: &FeatureVector) -> Result<(), TrainError> {
        if features.width() != self.input_width {
            return Err(TrainError::WidthMismatch { expected: self.input_width, found: features.width() });
        }
        if let PredictorMode::Direct { n_faces } = self.mode {
            if face >= n_faces {
                return Err(TrainError::FaceOutOfRange { face, n_faces });
            }
        }
        Ok(())
    }

    /// Prediction for `face` in its eye-normalized frame. With `mirrored`
    /// the network sees `features.mirrored()`; the direct variables are
    /// returned yaw-flipped, i.e. the direct predictor is exactly
    /// mirror-consistent.
    pub fn forward(&self, face: usize, features: &FeatureVector, mirrored: bool) -> Result<GazePrediction, TrainError> {
        self.check(face, features)?;
        Ok(match self.mode {
            PredictorMode::Direct { .. } => {
                let v = &self.values[3 * face..3 * face + 3];
                let yaw = if mirrored { -v[1] } else { v[1] };
                GazePrediction::new(v[0], yaw, v[2])
            }
            PredictorMode::Mlp { hidden } => {
                let layout = MlpLayout::new(self.input_width, hidden);
                let x = if mirrored { features.mirrored() } else { features.clone() };
                squash(mlp_raw(&self.values, &layout, x.as_slice()))
            }
        })
    }

    /// Add `upstream · ∂(pitch, yaw, log σ)/∂params` into `grad`.
    pub fn accumulate_grad(
        &self,
        face: usize,
        features: &FeatureVector,
        mirrored: bool,
        upstream: [f64; 3],
        grad: &mut [f64],
    ) -> Result<(), TrainError> {
        self.check(face, features)?;
        match self.mode {
            PredictorMode::Direct { .. } => {
                let yaw_sign = if mirrored { -1.0 } else { 1.0 };
                grad[3 * face] += upstream[0];
                grad[3 * face + 1] += yaw_sign * upstream[1];
                grad[3 * face + 2] += upstream[2];
            }
            PredictorMode::Mlp { hidden } => {
                let layout = MlpLayout::new(self.input_width, hidden);
                let x = if mirrored { features.mirrored() } else { features.clone() };
                mlp_backward(&self.values, &layout, x.as_slice(), upstream, grad);
            }
        }
        Ok(())
    }
}

fn mlp_backward(p: &[f64], layout: &MlpLayout, x: &[f64], upstream: [f64; 3], grad: &mut [f64]) {
    let MlpLayout { d, h, .. } = *layout;
    let (w1, b1) = (&p[layout.w1.clone()], &p[layout.b1.clone()]);
    let (w2, b2) = (&p[layout.w2.clone()], &p[layout.b2.clone()]);
    let (w3, b3) = (&p[layout.w3.clone()], &p[layout.b3.clone()]);
    let h1: Vec<f64> = (0..h).map(|j| (b1[j] + (0..d).map(|i| w1[j * d + i] * x[i]).sum::<f64>()).tanh()).collect();
    let h2: Vec<f64> = (0..h).map(|j| (b2[j] + (0..h).map(|i| w2[j * h + i] * h1[i]).sum::<f64>()).tanh()).collect();
    let raw0 = b3[0] + (0..h).map(|i| w3[i] * h2[i]).sum::<f64>();
    // d pitch / d raw0 = (π/2)·(1 − tanh²)
    let t = raw0.tanh();
    let d_raw = [upstream[0] * FRAC_PI_2 * (1.0 - t * t), upstream[1], upstream[2]];

    let mut d_h2 = vec![0.0; h];
    for k in 0..3 {
        grad[layout.b3.start + k] += d_raw[k];
        for i in 0..h {
            grad[layout.w3.start + k * h + i] += d_raw[k] * h2[i];
            d_h2[i] += d_raw[k] * w3[k * h + i];
        }
    }
    let d_z2: Vec<f64> = (0..h).map(|j| d_h2[j] * (1.0 - h2[j] * h2[j])).collect();
    let mut d_h1 = vec![0.0; h];
    for j in 0..h {
        grad[layout.b2.start + j] += d_z2[j];
        for i in 0..h {
            grad[layout.w2.start + j * h + i] += d_z2[j] * h1[i];
            d_h1[i] += d_z2[j] * w2[j * h + i];
        }
    }
    for j in 0..h {
        let dz = d_h1[j] * (1.0 - h1[j] * h1[j]);
        grad[layout.b1.start + j] += dz;
        for i in 0..d {
            grad[layout.w1.start + j * d + i] += dz * x[i];
        }
    }
}

/// `c · output` of the network on fixed inputs, as a function of the
/// network parameters; used to verify the hand-written backward pass.
pub struct MlpProbe<'a> {
    pub hidden: usize,
    pub input_width: usize,
    pub inputs: &'a [f64],
    pub weights: [f64; 3],
}

impl Objective for MlpProbe<'_> {
    type Error = TrainError;

    fn eval<T: Scalar>(&self, params: &[T]) -> Result<T, TrainError> {
        let layout = MlpLayout::new(self.input_width, self.hidden);
        let out = squash(mlp_raw(params, &layout, self.inputs));
        Ok(out.angles.pitch * T::of(self.weights[0])
            + out.angles.yaw * T::of(self.weights[1])
            + out.log_sigma * T::of(self.weights[2]))
    }
}
