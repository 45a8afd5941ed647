//! Command settings: built-in presets, overridden by a TOML key-value file,
//! overridden in turn by command-line flags.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use laeo::annotate::{DetectorConfig, MultiViewConfig};
use laeo::losses::{Geom3dMode, PseudoMode};
use laeo::scene::{FocalMode, NoiseModel, SynthConfig};
use laeo::trainer::{set_losses, AdamConfig, CueNoise, PredictorKind, ScheduleKind, SyntheticData, TrainConfig};

use crate::CliError;

/// Apply the keys of the TOML file at `path` over `preset`. Keys the
/// preset does not have are rejected.
pub fn resolve<T: Serialize + DeserializeOwned>(preset: T, path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else { return Ok(preset) };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    let file: toml::Table = toml::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    let mut table =
        toml::Table::try_from(&preset).map_err(|e| CliError::Invalid(format!("settings do not serialize: {e}")))?;
    for (key, value) in file {
        if !table.contains_key(&key) {
            return Err(CliError::Invalid(format!("{}: unknown key {key:?}", path.display())));
        }
        table.insert(key, value);
    }
    table.try_into().map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

pub fn parse_pseudo_mode(s: &str) -> Result<PseudoMode, CliError> {
    match s {
        "weighted" => Ok(PseudoMode::Weighted),
        "naive" => Ok(PseudoMode::Naive),
        "confident" => Ok(PseudoMode::Confident),
        _ => Err(CliError::Invalid(format!("pseudo mode {s:?} (expected weighted, naive or confident)"))),
    }
}

pub fn parse_geom3d_mode(s: &str) -> Result<Geom3dMode, CliError> {
    match s {
        "plane" => Ok(Geom3dMode::PlaneDistance),
        "cosine" => Ok(Geom3dMode::Cosine),
        _ => Err(CliError::Invalid(format!("geom3d mode {s:?} (expected plane or cosine)"))),
    }
}

/// Training, data and study settings shared by `train`, `ablate` and
/// `noise-study`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSettings {
    pub n_train: usize,
    pub n_labeled: usize,
    pub n_heldout: usize,
    pub heading_jitter_deg: f64,
    pub depth_noise: f64,
    pub cue_min_deg: f64,
    pub cue_max_deg: f64,
    /// `direct` or `mlp`.
    pub predictor: String,
    pub hidden: usize,
    /// `weak_only` or `supervised_then_joint`.
    pub schedule: String,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub iterations: u64,
    pub supervised_iterations: u64,
    /// 0 disables clipping.
    pub clip_norm: f64,
    pub losses: String,
    pub pseudo_mode: String,
    pub geom3d_mode: String,
    pub alpha: f64,
    pub beta: f64,
    pub t_alpha: u64,
    pub t_beta: u64,
    /// Number of runs per study cell.
    pub seeds: u64,
}

fn mode_names(config: &TrainConfig) -> (&'static str, &'static str) {
    let pseudo = match config.weights.pseudo_mode {
        PseudoMode::Weighted => "weighted",
        PseudoMode::Naive => "naive",
        PseudoMode::Confident => "confident",
    };
    let geom3d = match config.weights.geom3d_mode {
        Geom3dMode::PlaneDistance => "plane",
        Geom3dMode::Cosine => "cosine",
    };
    (pseudo, geom3d)
}

impl TrainSettings {
    pub fn from_parts(config: &TrainConfig, data: &SyntheticData, seeds: u64) -> Self {
        let (predictor, hidden) = match config.predictor {
            PredictorKind::Direct => ("direct", 0),
            PredictorKind::Mlp { hidden } => ("mlp", hidden),
        };
        let (pseudo, geom3d) = mode_names(config);
        Self {
            n_train: data.n_train,
            n_labeled: data.n_labeled,
            n_heldout: data.n_heldout,
            heading_jitter_deg: data.synth.heading_jitter_deg,
            depth_noise: data.depth_noise,
            cue_min_deg: config.cue_noise.min_deg,
            cue_max_deg: config.cue_noise.max_deg,
            predictor: predictor.into(),
            hidden,
            schedule: match config.kind {
                ScheduleKind::WeakOnly => "weak_only",
                ScheduleKind::SupervisedThenJoint => "supervised_then_joint",
            }
            .into(),
            learning_rate: config.adam.learning_rate,
            beta1: config.adam.beta1,
            beta2: config.adam.beta2,
            epsilon: config.adam.epsilon,
            batch_size: config.batch_size,
            iterations: config.iterations,
            supervised_iterations: config.supervised_iterations,
            clip_norm: config.clip_norm.unwrap_or(0.0),
            losses: laeo::trainer::loss_set_name(config),
            pseudo_mode: pseudo.into(),
            geom3d_mode: geom3d.into(),
            alpha: config.weights.alpha,
            beta: config.weights.beta,
            t_alpha: config.schedule.t_alpha,
            t_beta: config.schedule.t_beta,
            seeds,
        }
    }

    pub fn train_config(&self, seed: u64) -> Result<TrainConfig, CliError> {
        let predictor = match self.predictor.as_str() {
            "direct" => PredictorKind::Direct,
            "mlp" => PredictorKind::Mlp { hidden: self.hidden },
            p => return Err(CliError::Invalid(format!("predictor {p:?} (expected direct or mlp)"))),
        };
        let kind = match self.schedule.as_str() {
            "weak_only" => ScheduleKind::WeakOnly,
            "supervised_then_joint" => ScheduleKind::SupervisedThenJoint,
            s => {
                return Err(CliError::Invalid(format!("schedule {s:?} (expected weak_only or supervised_then_joint)")))
            }
        };
        let mut config = TrainConfig {
            kind,
            adam: AdamConfig {
                learning_rate: self.learning_rate,
                beta1: self.beta1,
                beta2: self.beta2,
                epsilon: self.epsilon,
            },
            batch_size: self.batch_size,
            iterations: self.iterations,
            supervised_iterations: self.supervised_iterations,
            seed,
            predictor,
            cue_noise: CueNoise { min_deg: self.cue_min_deg, max_deg: self.cue_max_deg },
            clip_norm: (self.clip_norm > 0.0).then_some(self.clip_norm),
            ..Default::default()
        };
        set_losses(&mut config, &self.losses)?;
        config.weights.pseudo_mode = parse_pseudo_mode(&self.pseudo_mode)?;
        config.weights.geom3d_mode = parse_geom3d_mode(&self.geom3d_mode)?;
        config.weights.alpha = self.alpha;
        config.weights.beta = self.beta;
        config.schedule.t_alpha = self.t_alpha;
        config.schedule.t_beta = self.t_beta;
        config.validate()?;
        Ok(config)
    }

    pub fn data(&self) -> SyntheticData {
        let mut data = SyntheticData {
            n_train: self.n_train,
            n_labeled: self.n_labeled,
            n_heldout: self.n_heldout,
            depth_noise: self.depth_noise,
            ..Default::default()
        };
        data.synth.heading_jitter_deg = self.heading_jitter_deg;
        data
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSettings {
    pub n: usize,
    pub heading_jitter_deg: f64,
    pub focal_px: f64,
}

impl Default for SynthSettings {
    fn default() -> Self {
        let s = SynthConfig::default();
        Self { n: 100, heading_jitter_deg: s.heading_jitter_deg, focal_px: s.focal_px }
    }
}

impl SynthSettings {
    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig { heading_jitter_deg: self.heading_jitter_deg, focal_px: self.focal_px, ..Default::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorruptSettings {
    /// `exact` or `max-image-dim`.
    pub focal_mode: String,
    pub eye2d_sigma_px: f64,
    pub depth_rel_sigma: f64,
    pub target_offset_mm: f64,
}

impl Default for CorruptSettings {
    fn default() -> Self {
        Self { focal_mode: "exact".into(), eye2d_sigma_px: 0.0, depth_rel_sigma: 0.0, target_offset_mm: 0.0 }
    }
}

impl CorruptSettings {
    pub fn noise_model(&self, seed: u64) -> Result<NoiseModel, CliError> {
        let focal_mode = match self.focal_mode.as_str() {
            "exact" => FocalMode::Exact,
            "max-image-dim" => FocalMode::MaxImageDim,
            m => return Err(CliError::Invalid(format!("focal mode {m:?} (expected exact or max-image-dim)"))),
        };
        let noise = NoiseModel {
            focal_mode,
            eye2d_sigma_px: self.eye2d_sigma_px,
            depth_rel_sigma: self.depth_rel_sigma,
            target_offset_mm: self.target_offset_mm,
            seed,
        };
        noise.validate().map_err(|e| CliError::Invalid(e.to_string()))?;
        Ok(noise)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradcheckSettings {
    pub n: usize,
    pub step: f64,
    pub tolerance: f64,
}

impl Default for GradcheckSettings {
    fn default() -> Self {
        Self { n: 500, step: 1e-6, tolerance: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelStudySettings {
    pub n_scenes: usize,
    pub eye2d_sigma_px: f64,
    pub depth_rel_sigma: f64,
    /// Target offset and separation for the eye-center bound.
    pub bound_offset_mm: f64,
    pub bound_separation_mm: f64,
}

impl Default for LabelStudySettings {
    fn default() -> Self {
        Self {
            n_scenes: 1000,
            eye2d_sigma_px: 3.0,
            depth_rel_sigma: 0.1,
            bound_offset_mm: 37.5,
            bound_separation_mm: 500.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectSettings {
    pub n_frames: usize,
    pub n_subjects: usize,
    pub n_views: usize,
    pub gaze_noise_deg: f64,
    pub min_views: usize,
    pub threshold_deg: f64,
    pub iou_threshold: f64,
}

impl Default for DetectSettings {
    fn default() -> Self {
        let m = MultiViewConfig::default();
        let d = DetectorConfig::default();
        Self {
            n_frames: 500,
            n_subjects: m.n_subjects,
            n_views: m.n_views,
            gaze_noise_deg: m.gaze_noise_deg,
            min_views: d.min_views,
            threshold_deg: d.threshold_deg,
            iou_threshold: d.iou_threshold,
        }
    }
}

impl DetectSettings {
    pub fn detector(&self) -> DetectorConfig {
        DetectorConfig {
            threshold_deg: self.threshold_deg,
            min_views: self.min_views,
            iou_threshold: self.iou_threshold,
        }
    }

    pub fn multiview(&self) -> MultiViewConfig {
        MultiViewConfig {
            n_subjects: self.n_subjects,
            n_views: self.n_views,
            gaze_noise_deg: self.gaze_noise_deg,
            detector: self.detector(),
            ..Default::default()
        }
    }
}
