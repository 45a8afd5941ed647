//! Toy gaze predictors trained with the mutual-gaze losses.

mod adam;
mod data;
mod eval;
mod features;
mod predictor;
mod study;
mod train;

pub use adam::{Adam, AdamConfig};
pub use data::{Face, TrainPair, TrainSet};
pub use eval::{angular_error_deg, average_ranks, evaluate, spearman, Evaluation};
pub use features::{
    face_features, frontal_angle, CueNoise, FaceFeatures, FeatureVector, CUE_NOISE, CUE_PITCH, CUE_YAW, EYE_X,
    FEATURE_WIDTH, HEADING_X, MIRROR_FLAG, YAW_ODD,
};
pub use predictor::{init_predictor, parameter_count, MlpProbe, PredictorMode, PredictorParams, INIT_STD};
pub use study::*;
pub use train::{
    batch_objective, run_training, sample_batch, train_step, Batch, IterationRecord, Phase, PredictorKind,
    ScheduleKind, TrainConfig, TrainReport, TrainSummary, Trained, DEFAULT_CLIP_NORM,
};

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::losses::LossError;
use crate::scene::SceneError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training setting: {0}")]
    InvalidConfig(String),
    #[error("feature width {found} does not match the predictor's {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("face {face} has no parameters (direct predictor over {n_faces} faces)")]
    FaceOutOfRange { face: usize, n_faces: usize },
    #[error("not enough data: {0}")]
    EmptyData(String),
    #[error("non-finite value{}: {detail}", .iteration.map(|i| format!(" at iteration {i}")).unwrap_or_default())]
    NonFinite { iteration: Option<u64>, detail: String },
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
