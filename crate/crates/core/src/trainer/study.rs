//! Experiment drivers: loss ablations, variant comparisons and the depth
//! noise study, all on synthetic pairs.

use serde::Serialize;

use super::{run_training, AdamConfig, PredictorKind, TrainConfig, TrainError, TrainSet};
use crate::losses::LaeoComponent;
use crate::scene::{corrupt, derive_seed, synth_scene, LaeoPair, NoiseModel, SynthConfig};

/// `n` synthetic pairs; pair `i` is drawn from `derive_seed(seed, i)`.
pub fn synthetic_pairs(config: &SynthConfig, n: usize, seed: u64) -> Result<Vec<LaeoPair>, TrainError> {
    (0..n as u64).map(|i| Ok(synth_scene(config, derive_seed(seed, i))?)).collect()
}

/// Training pairs plus a disjoint held-out set, both featurized.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSplit {
    pub train: TrainSet,
    pub heldout: TrainSet,
}

/// Synthetic data for one run: `n_train` mutual-gaze pairs, of which the
/// first `n_labeled` are supervised instead, and `n_heldout` evaluation
/// pairs. Geometry noise applies to the training pairs only.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticData {
    pub synth: SynthConfig,
    pub n_train: usize,
    pub n_labeled: usize,
    pub n_heldout: usize,
    pub depth_noise: f64,
}

impl Default for SyntheticData {
    fn default() -> Self {
        Self { synth: SynthConfig::default(), n_train: 200, n_labeled: 0, n_heldout: 0, depth_noise: 0.0 }
    }
}

impl SyntheticData {
    pub fn build(&self, config: &TrainConfig, seed: u64) -> Result<SyntheticSplit, TrainError> {
        let pairs = synthetic_pairs(&self.synth, self.n_train + self.n_heldout, seed)?;
        let noise = NoiseModel::depth_only(self.depth_noise, derive_seed(seed, u64::MAX));
        let feature_seed = derive_seed(seed, u64::MAX - 1);
        let mut train = TrainSet::default();
        let mut heldout = TrainSet::default();
        for (i, p) in pairs.iter().enumerate() {
            if i < self.n_labeled.min(self.n_train) {
                train.add_labeled_pair(p, &config.cue_noise, feature_seed)?;
            } else if i < self.n_train {
                train.add_pair(&corrupt(p, &noise)?, &config.cue_noise, feature_seed)?;
            } else {
                heldout.add_pair(p, &config.cue_noise, feature_seed)?;
            }
        }
        Ok(SyntheticSplit { train, heldout })
    }
}

/// Weak-only setup for loss ablations: one free prediction per face and
/// batches of up to 1024 pairs.
pub fn ablation_setup(losses: &str) -> Result<TrainConfig, TrainError> {
    let mut config = TrainConfig {
        predictor: PredictorKind::Direct,
        batch_size: 1024,
        iterations: 2000,
        adam: AdamConfig { learning_rate: 0.01, ..Default::default() },
        ..Default::default()
    };
    set_losses(&mut config, losses)?;
    Ok(config)
}

/// Weak-only setup for the variant, depth-noise and uncertainty studies: a
/// shared predictor evaluated on held-out pairs. Wide heading jitter makes
/// the heteroscedastic cue the main source of gaze information. The
/// symmetry weight is small: its log σ term rewards ignoring the cue, so at
/// full weight it overrides the angle losses, while a small weight still
/// calibrates σ̂.
pub fn study_setup() -> (TrainConfig, SyntheticData) {
    let mut config = TrainConfig {
        iterations: 3000,
        adam: AdamConfig { learning_rate: 3e-3, ..Default::default() },
        ..Default::default()
    };
    config.weights.alpha = 0.02;
    let mut data = SyntheticData { n_train: 200, n_heldout: 200, ..Default::default() };
    data.synth.heading_jitter_deg = 45.0;
    (config, data)
}

/// Outcome of one training run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunResult {
    pub variant: String,
    pub seed: u64,
    pub train_error_deg: f64,
    pub heldout_error_deg: Option<f64>,
    pub label_error_deg: Option<f64>,
    pub spearman: f64,
    pub spearman_defined: bool,
}

impl RunResult {
    /// Held-out error when there is a held-out set, else training error.
    pub fn error_deg(&self) -> f64 {
        self.heldout_error_deg.unwrap_or(self.train_error_deg)
    }
}

/// Train with `config` (its seed replaced by `seed`) on freshly built data.
pub fn run_variant(
    variant: &str,
    data: &SyntheticData,
    config: &TrainConfig,
    seed: u64,
) -> Result<RunResult, TrainError> {
    let config = TrainConfig { seed, ..config.clone() };
    let split = data.build(&config, seed)?;
    let heldout = (!split.heldout.faces.is_empty()).then_some(&split.heldout);
    let trained = run_training(&split.train, heldout, &config)?;
    let s = &trained.report.summary;
    let rank_source = s.heldout.as_ref().unwrap_or(&s.train);
    Ok(RunResult {
        variant: variant.to_string(),
        seed,
        train_error_deg: s.train.mean_error_deg,
        heldout_error_deg: s.heldout.as_ref().map(|e| e.mean_error_deg),
        label_error_deg: s.train.mean_label_error_deg,
        spearman: rank_source.spearman,
        spearman_defined: rank_source.spearman_defined,
    })
}

/// Comma-separated component names, `sym` for the symmetry loss.
pub fn loss_set_name(config: &TrainConfig) -> String {
    let mut names: Vec<&str> = config.weights.laeo_components.iter().map(|c| c.name()).collect();
    if config.weights.symmetry {
        names.push("sym");
    }
    names.join(",")
}

/// Parse a comma list of `geom3d`, `geom2d`, `pseudo`, `sym` into `config`.
pub fn set_losses(config: &mut TrainConfig, list: &str) -> Result<(), TrainError> {
    config.weights.laeo_components.clear();
    config.weights.symmetry = false;
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match name {
            "geom3d" => config.weights.laeo_components.insert(LaeoComponent::Geom3d),
            "geom2d" => config.weights.laeo_components.insert(LaeoComponent::Geom2d),
            "pseudo" => config.weights.laeo_components.insert(LaeoComponent::Pseudo),
            "sym" => {
                config.weights.symmetry = true;
                true
            }
            other => return Err(TrainError::InvalidConfig(format!("unknown loss '{other}'"))),
        };
    }
    Ok(())
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    match v.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => v[n / 2],
        n => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

/// One cell of the depth-noise study.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseStudyRow {
    pub sigma: f64,
    pub with_l2d: bool,
    pub seed: u64,
    pub error_deg: f64,
}

/// Weak-only training on depth-corrupted pairs, with and without the 2D
/// loss. Each seed fixes the scenes and the unit noise draws, so rungs of
/// the ladder differ only in the noise magnitude.
pub fn depth_noise_study(
    config: &TrainConfig,
    data: &SyntheticData,
    sigmas: &[f64],
    seeds: &[u64],
) -> Result<Vec<NoiseStudyRow>, TrainError> {
    let mut rows = Vec::new();
    for &sigma in sigmas {
        for with_l2d in [true, false] {
            let mut cfg = config.clone();
            if with_l2d {
                cfg.weights.laeo_components.insert(LaeoComponent::Geom2d);
            } else {
                cfg.weights.laeo_components.remove(&LaeoComponent::Geom2d);
            }
            let data = SyntheticData { depth_noise: sigma, ..data.clone() };
            for &seed in seeds {
                let r = run_variant("", &data, &cfg, seed)?;
                rows.push(NoiseStudyRow { sigma, with_l2d, seed, error_deg: r.error_deg() });
            }
        }
    }
    Ok(rows)
}

/// Median error per `(sigma, with_l2d)`, in first-appearance order.
pub fn noise_study_medians(rows: &[NoiseStudyRow]) -> Vec<(f64, bool, f64)> {
    let mut keys: Vec<(f64, bool)> = Vec::new();
    for r in rows {
        if !keys.contains(&(r.sigma, r.with_l2d)) {
            keys.push((r.sigma, r.with_l2d));
        }
    }
    keys.into_iter()
        .map(|(s, w)| {
            let e: Vec<f64> = rows.iter().filter(|r| r.sigma == s && r.with_l2d == w).map(|r| r.error_deg).collect();
            (s, w, median(&e))
        })
        .collect()
}
