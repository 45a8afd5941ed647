//! The optimization loop: deterministic batches, one optimizer step per
//! iteration on the combined objective, and the two training schedules.

use std::collections::BTreeSet;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    evaluate, init_predictor, Adam, AdamConfig, CueNoise, Evaluation, PredictorMode, PredictorParams, TrainError,
    TrainSet,
};
use crate::losses::{
    coefficients, objective_with, Breakdown, Exclusions, GazePrediction, LaeoSample, LossError, LossOutput,
    LossWeights, MirrorSample, ObjectiveInput, Schedule, SupervisedSample,
};
use crate::scene::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    /// Mutual-gaze and symmetry losses only; β fixed at 1.
    WeakOnly,
    /// `supervised_iterations` on labeled faces, then `iterations` jointly.
    SupervisedThenJoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorKind {
    Direct,
    Mlp { hidden: usize },
}

/// Default per-sample gradient clip; ordinary loss gradients stay below it.
pub const DEFAULT_CLIP_NORM: f64 = 5.0;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub weights: LossWeights,
    pub schedule: Schedule,
    pub kind: ScheduleKind,
    pub adam: AdamConfig,
    pub batch_size: usize,
    /// Iterations of the weak-only run, or of the joint phase.
    pub iterations: u64,
    pub supervised_iterations: u64,
    pub seed: u64,
    pub predictor: PredictorKind,
    pub cue_noise: CueNoise,
    /// Largest norm of one face's output gradient, in per-sample units.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            weights: LossWeights::default(),
            schedule: Schedule::default(),
            kind: ScheduleKind::WeakOnly,
            adam: AdamConfig::default(),
            batch_size: 80,
            iterations: 3000,
            supervised_iterations: 2000,
            seed: 42,
            predictor: PredictorKind::Mlp { hidden: 32 },
            cue_noise: CueNoise::default(),
            clip_norm: Some(DEFAULT_CLIP_NORM),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::InvalidConfig(m));
        self.weights.validate().map_err(TrainError::InvalidConfig)?;
        self.adam.validate().map_err(TrainError::InvalidConfig)?;
        if !(self.adam.learning_rate > 0.0) {
            return bad("learning_rate must be > 0".into());
        }
        if self.iterations == 0 {
            return bad("iterations must be > 0".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be > 0".into());
        }
        if let PredictorKind::Mlp { hidden: 0 } = self.predictor {
            return bad("hidden width must be > 0".into());
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return bad(format!("clip_norm must be > 0, got {c}"));
            }
        }
        let n = &self.cue_noise;
        if !(n.min_deg >= 0.0 && n.max_deg >= n.min_deg) {
            return bad(format!("cue noise range {}..{} is invalid", n.min_deg, n.max_deg));
        }
        Ok(())
    }

    pub fn mode_for(&self, set: &TrainSet) -> PredictorMode {
        match self.predictor {
            PredictorKind::Direct => PredictorMode::Direct { n_faces: set.faces.len() },
            PredictorKind::Mlp { hidden } => PredictorMode::Mlp { hidden },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Supervised,
    Joint,
    Weak,
}

/// Faces for the aleatoric loss and pair indices for the mutual-gaze losses.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Batch {
    pub supervised: Vec<usize>,
    pub laeo: Vec<usize>,
}

fn choose(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if k >= n {
        return (0..n).collect();
    }
    let mut v = rand::seq::index::sample(rng, n, k).into_vec();
    v.sort_unstable();
    v
}

/// Batch of iteration `i`, a pure function of `(seed, phase, i)`.
pub fn sample_batch(set: &TrainSet, config: &TrainConfig, phase: Phase, i: u64) -> Batch {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(derive_seed(config.seed, phase as u64), i));
    let supervised = match phase {
        Phase::Weak => Vec::new(),
        _ => choose(set.supervised.len(), config.batch_size, &mut rng).into_iter().map(|k| set.supervised[k]).collect(),
    };
    let laeo = match phase {
        Phase::Supervised => Vec::new(),
        _ if config.weights.laeo_components.is_empty() => Vec::new(),
        _ => choose(set.pairs.len(), config.batch_size, &mut rng),
    };
    Batch { supervised, laeo }
}

/// Value, per-output gradients and parameter gradient of the objective on
/// one batch. Pseudo targets are formed from the predictions at `params`.
pub fn batch_objective(
    params: &PredictorParams,
    set: &TrainSet,
    batch: &Batch,
    coeffs: [f64; 3],
    weights: &LossWeights,
    clip_norm: Option<f64>,
) -> Result<(LossOutput, Breakdown, Vec<f64>), TrainError> {
    let predict = |face: usize, mirrored: bool| -> Result<GazePrediction, TrainError> {
        let f = &set.faces[face];
        let x = if mirrored { &f.features.alternate } else { &f.features.primary };
        let p = params.forward(face, x, mirrored)?;
        if !p.to_array().iter().all(|v| v.is_finite()) {
            return Err(TrainError::NonFinite { iteration: None, detail: format!("prediction for face {}", f.id) });
        }
        Ok(p)
    };
    let supervised = batch
        .supervised
        .iter()
        .map(|&face| {
            let gt = set.faces[face]
                .label
                .ok_or_else(|| TrainError::EmptyData(format!("face {} has no label", set.faces[face].id)))?;
            Ok(SupervisedSample { face, pred: predict(face, false)?, gt })
        })
        .collect::<Result<Vec<_>, TrainError>>()?;
    let mut laeo = Vec::with_capacity(batch.laeo.len());
    for &k in &batch.laeo {
        let pair = &set.pairs[k];
        let [a, b] = pair.faces;
        laeo.push(LaeoSample {
            geometry: &pair.geometry,
            face_a: a,
            face_b: b,
            pred_a: predict(a, false)?,
            pred_b: predict(b, false)?,
        });
    }
    let symmetry = if weights.symmetry {
        let faces: BTreeSet<usize> =
            batch.supervised.iter().copied().chain(batch.laeo.iter().flat_map(|&k| set.pairs[k].faces)).collect();
        faces
            .into_iter()
            .map(|face| Ok(MirrorSample { face, original: predict(face, false)?, mirrored: predict(face, true)? }))
            .collect::<Result<Vec<_>, TrainError>>()?
    } else {
        Vec::new()
    };
    let input = ObjectiveInput { supervised: &supervised, symmetry: &symmetry, laeo: &laeo };
    let (out, breakdown) = objective_with(coeffs, &input, weights).map_err(|e| match e {
        LossError::NonFinitePair { component, frame_id } => {
            TrainError::NonFinite { iteration: None, detail: format!("{component} loss for pair {frame_id}") }
        }
        LossError::NonFinite { .. } => TrainError::NonFinite { iteration: None, detail: "combined objective".into() },
        e => TrainError::Loss(e),
    })?;
    let mut grad = vec![0.0; params.len()];
    // keys are ordered by (face, mirrored, quantity): gather each output triple
    let mut keys = out.grads.iter().peekable();
    while let Some((k, &g)) = keys.next() {
        let mut upstream = [0.0; 3];
        upstream[k.quantity.index()] = g;
        while let Some((next, &g)) = keys.peek() {
            if next.face != k.face || next.mirrored != k.mirrored {
                break;
            }
            upstream[next.quantity.index()] = g;
            keys.next();
        }
        if let Some(c) = clip_norm {
            // batch means scale each sample by 1/n; clip in per-sample units
            let limit = c / batch.laeo.len().max(batch.supervised.len()).max(1) as f64;
            let norm = upstream.iter().map(|u| u * u).sum::<f64>().sqrt();
            if norm > limit {
                upstream = upstream.map(|u| u * limit / norm);
            }
        }
        let f = &set.faces[k.face];
        let x = if k.mirrored { &f.features.alternate } else { &f.features.primary };
        params.accumulate_grad(k.face, x, k.mirrored, upstream, &mut grad)?;
    }
    Ok((out, breakdown, grad))
}

/// One optimizer step; returns the loss breakdown before the step. Pseudo
/// targets come from the predictions before the step.
pub fn train_step(
    params: &mut PredictorParams,
    optimizer: &mut Adam,
    set: &TrainSet,
    batch: &Batch,
    coeffs: [f64; 3],
    config: &TrainConfig,
) -> Result<Breakdown, TrainError> {
    let (_, breakdown, grad) = batch_objective(params, set, batch, coeffs, &config.weights, config.clip_norm)?;
    optimizer.step(&mut params.values, &grad);
    Ok(breakdown)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: u64,
    pub phase: Phase,
    pub total: f64,
    pub aleatoric: Option<f64>,
    pub symmetry: Option<f64>,
    pub geom3d: Option<f64>,
    pub geom2d: Option<f64>,
    pub pseudo: Option<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub excluded_geom3d: usize,
    pub excluded_geom2d: usize,
    pub excluded_pseudo: usize,
}

impl IterationRecord {
    fn new(iteration: u64, phase: Phase, b: &Breakdown) -> Self {
        Self {
            iteration,
            phase,
            total: b.total,
            aleatoric: b.aleatoric,
            symmetry: b.symmetry,
            geom3d: b.geom3d,
            geom2d: b.geom2d,
            pseudo: b.pseudo,
            alpha: b.alpha,
            beta: b.beta,
            excluded_geom3d: b.exclusions.geom3d,
            excluded_geom2d: b.exclusions.geom2d,
            excluded_pseudo: b.exclusions.pseudo,
        }
    }
}

/// Final metrics; the per-iteration history is kept alongside.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainSummary {
    pub seed: u64,
    pub iterations: u64,
    /// On the training faces with known truth.
    pub train: Evaluation,
    pub heldout: Option<Evaluation>,
    /// Exclusions summed over all iterations.
    pub excluded: Exclusions,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub history: Vec<IterationRecord>,
    pub summary: TrainSummary,
}

impl TrainReport {
    /// Error on held-out faces when available, else on the training faces.
    pub fn final_error_deg(&self) -> f64 {
        self.summary.heldout.as_ref().unwrap_or(&self.summary.train).mean_error_deg
    }

    pub fn write_history_csv(&self, out: impl Write) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.history {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary_json(&self, mut out: impl Write) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut out, &self.summary)?;
        out.write_all(b"\n")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trained {
    pub params: PredictorParams,
    pub report: TrainReport,
}

fn check_data(set: &TrainSet, config: &TrainConfig) -> Result<(), TrainError> {
    if set.faces.is_empty() {
        return Err(TrainError::EmptyData("no faces".into()));
    }
    let needs_pairs = !config.weights.laeo_components.is_empty();
    match config.kind {
        ScheduleKind::WeakOnly if set.pairs.is_empty() => {
            Err(TrainError::EmptyData("weak-only training needs mutual-gaze pairs".into()))
        }
        ScheduleKind::WeakOnly if !needs_pairs && !config.weights.symmetry => {
            Err(TrainError::InvalidConfig("weak-only training with every loss disabled".into()))
        }
        ScheduleKind::SupervisedThenJoint if set.supervised.is_empty() => {
            Err(TrainError::EmptyData("the supervised phase needs labeled faces".into()))
        }
        _ => Ok(()),
    }
}

/// Run the configured schedule from a fresh predictor and evaluate it.
///
/// In the two-phase schedule the α warm-up runs on the global iteration
/// count while the β warm-up restarts with the joint phase.
pub fn run_training(set: &TrainSet, heldout: Option<&TrainSet>, config: &TrainConfig) -> Result<Trained, TrainError> {
    config.validate()?;
    check_data(set, config)?;
    if heldout.is_some() && config.predictor == PredictorKind::Direct {
        return Err(TrainError::InvalidConfig("a direct predictor has no parameters for held-out faces".into()));
    }
    let width = set.input_width().unwrap_or(super::FEATURE_WIDTH);
    let mut params = init_predictor(config.mode_for(set), width, config.seed);
    let mut adam = Adam::new(config.adam, params.len());
    let mut history = Vec::new();
    let mut excluded = Exclusions::default();
    let weights = &config.weights;
    let mut run = |phase: Phase, i: u64, coeffs: [f64; 3], params: &mut PredictorParams| {
        let batch = sample_batch(set, config, phase, i);
        let b = train_step(params, &mut adam, set, &batch, coeffs, config).map_err(|e| match e {
            TrainError::NonFinite { detail, .. } => TrainError::NonFinite { iteration: Some(i), detail },
            e => e,
        })?;
        excluded.geom3d += b.exclusions.geom3d;
        excluded.geom2d += b.exclusions.geom2d;
        excluded.pseudo += b.exclusions.pseudo;
        history.push(IterationRecord::new(i, phase, &b));
        Ok::<_, TrainError>(())
    };
    let total = match config.kind {
        ScheduleKind::WeakOnly => {
            for i in 0..config.iterations {
                run(Phase::Weak, i, coefficients(i, weights, &config.schedule, true), &mut params)?;
            }
            config.iterations
        }
        ScheduleKind::SupervisedThenJoint => {
            let s = config.supervised_iterations;
            for i in 0..s {
                let [c_g, c_sym, _] = coefficients(i, weights, &config.schedule, false);
                run(Phase::Supervised, i, [c_g, c_sym, 0.0], &mut params)?;
            }
            for j in 0..config.iterations {
                let i = s + j;
                let [c_g, c_sym, _] = coefficients(i, weights, &config.schedule, false);
                let [_, _, c_laeo] = coefficients(j, weights, &config.schedule, false);
                run(Phase::Joint, i, [c_g, c_sym, c_laeo], &mut params)?;
            }
            s + config.iterations
        }
    };
    let train = evaluate(&params, set)?;
    let heldout = heldout.map(|h| evaluate(&params, h)).transpose()?;
    let summary = TrainSummary { seed: config.seed, iterations: total, train, heldout, excluded };
    Ok(Trained { params, report: TrainReport { history, summary } })
}
