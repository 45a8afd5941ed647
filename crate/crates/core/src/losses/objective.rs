//! The combined training objective `L_G + α(i)·L_sym + β(i)·L_LAEO`.

use std::collections::BTreeMap;

use super::{
    aleatoric_loss, laeo_component_loss, symmetry_loss, GazePrediction, LaeoComponent, LossError, LossOutput,
    LossWeights, PairGeometry,
};
use crate::geometry::GazeAngles;

/// Linear warm-up clamped at 1: `min(i/T, 1)`.
pub fn ramp(i: u64, t: u64) -> f64 {
    if t == 0 {
        1.0
    } else {
        (i as f64 / t as f64).min(1.0)
    }
}

/// Warm-up lengths for the symmetry and mutual-gaze weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub t_alpha: u64,
    pub t_beta: u64,
}

impl Default for Schedule {
    fn default() -> Self {
        Self { t_alpha: 3000, t_beta: 2400 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupervisedSample {
    pub face: usize,
    pub pred: GazePrediction,
    pub gt: GazeAngles,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MirrorSample {
    pub face: usize,
    pub original: GazePrediction,
    pub mirrored: GazePrediction,
}

#[derive(Clone, Copy, Debug)]
pub struct LaeoSample<'a> {
    pub geometry: &'a PairGeometry,
    pub face_a: usize,
    pub face_b: usize,
    pub pred_a: GazePrediction,
    pub pred_b: GazePrediction,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ObjectiveInput<'a> {
    pub supervised: &'a [SupervisedSample],
    pub symmetry: &'a [MirrorSample],
    pub laeo: &'a [LaeoSample<'a>],
}

impl ObjectiveInput<'_> {
    pub fn is_empty(&self) -> bool {
        self.supervised.is_empty() && self.symmetry.is_empty() && self.laeo.is_empty()
    }
}

/// Pairs left out of a component because its geometry was degenerate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct Exclusions {
    pub geom3d: usize,
    pub geom2d: usize,
    pub pseudo: usize,
}

impl Exclusions {
    fn bump(&mut self, c: LaeoComponent) {
        match c {
            LaeoComponent::Geom3d => self.geom3d += 1,
            LaeoComponent::Geom2d => self.geom2d += 1,
            LaeoComponent::Pseudo => self.pseudo += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.geom3d + self.geom2d + self.pseudo
    }
}

/// Batch-mean value and gradients of each enabled component, unweighted.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ComponentParts {
    pub aleatoric: Option<LossOutput>,
    pub symmetry: Option<LossOutput>,
    pub laeo: BTreeMap<LaeoComponent, LossOutput>,
    pub exclusions: Exclusions,
}

fn mean(parts: impl IntoIterator<Item = LossOutput>) -> Option<LossOutput> {
    let mut acc = LossOutput::default();
    let mut n = 0usize;
    for p in parts {
        acc.add_scaled(&p, 1.0);
        n += 1;
    }
    if n == 0 {
        return None;
    }
    let mut out = LossOutput::default();
    out.add_scaled(&acc, 1.0 / n as f64);
    Some(out)
}

pub fn component_parts(input: &ObjectiveInput<'_>, weights: &LossWeights) -> Result<ComponentParts, LossError> {
    let aleatoric = mean(input.supervised.iter().map(|s| aleatoric_loss(s.pred, s.gt).with_faces(|_| s.face)));
    let symmetry = if weights.symmetry {
        let terms = input
            .symmetry
            .iter()
            .map(|s| symmetry_loss(s.original, s.mirrored).map(|o| o.with_faces(|_| s.face)))
            .collect::<Result<Vec<_>, _>>()?;
        mean(terms)
    } else {
        None
    };
    let mut laeo = BTreeMap::new();
    let mut exclusions = Exclusions::default();
    for &c in &weights.laeo_components {
        let mut terms = Vec::with_capacity(input.laeo.len());
        for s in input.laeo {
            match laeo_component_loss(s.geometry, s.pred_a, s.pred_b, c, weights) {
                Ok(o) => terms.push(o.with_faces(|f| if f == 0 { s.face_a } else { s.face_b })),
                Err(LossError::Geometry(_) | LossError::PseudoDegenerate { .. }) => exclusions.bump(c),
                Err(_) => {
                    return Err(LossError::NonFinitePair { component: c.name(), frame_id: s.geometry.frame_id.clone() })
                }
            }
        }
        if let Some(m) = mean(terms) {
            laeo.insert(c, m);
        }
    }
    Ok(ComponentParts { aleatoric, symmetry, laeo, exclusions })
}

/// `(1, α(i), β(i))`. Without supervision the aleatoric term is dropped and
/// β is held at 1.
pub fn coefficients(i: u64, weights: &LossWeights, schedule: &Schedule, weak_only: bool) -> [f64; 3] {
    let alpha = weights.alpha * ramp(i, schedule.t_alpha);
    if weak_only {
        [0.0, alpha, 1.0]
    } else {
        [1.0, alpha, weights.beta * ramp(i, schedule.t_beta)]
    }
}

/// `c₀·L_G + c₁·L_sym + c₂·ΣL_LAEO`.
pub fn combine(parts: &ComponentParts, [c_g, c_sym, c_laeo]: [f64; 3]) -> LossOutput {
    let mut out = LossOutput::default();
    if let Some(a) = &parts.aleatoric {
        out.add_scaled(a, c_g);
    }
    if let Some(s) = &parts.symmetry {
        out.add_scaled(s, c_sym);
    }
    for l in parts.laeo.values() {
        out.add_scaled(l, c_laeo);
    }
    out
}

/// Unweighted component values and the weights applied at one iteration.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Breakdown {
    pub total: f64,
    pub aleatoric: Option<f64>,
    pub symmetry: Option<f64>,
    pub geom3d: Option<f64>,
    pub geom2d: Option<f64>,
    pub pseudo: Option<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub exclusions: Exclusions,
}

pub fn total_objective(
    i: u64,
    input: &ObjectiveInput<'_>,
    weights: &LossWeights,
    schedule: &Schedule,
) -> Result<(LossOutput, Breakdown), LossError> {
    let coeffs = coefficients(i, weights, schedule, input.supervised.is_empty());
    objective_with(coeffs, input, weights)
}

/// The objective under explicit coefficients `[c_G, c_sym, c_LAEO]`.
pub fn objective_with(
    coeffs: [f64; 3],
    input: &ObjectiveInput<'_>,
    weights: &LossWeights,
) -> Result<(LossOutput, Breakdown), LossError> {
    if input.is_empty() {
        return Err(LossError::Empty);
    }
    let parts = component_parts(input, weights)?;
    let out = combine(&parts, coeffs);
    if !out.value.is_finite() || out.grads.values().any(|g| !g.is_finite()) {
        return Err(LossError::NonFinite { index: 0 });
    }
    let value_of = |c| parts.laeo.get(&c).map(|o: &LossOutput| o.value);
    let breakdown = Breakdown {
        total: out.value,
        aleatoric: parts.aleatoric.as_ref().map(|o| o.value),
        symmetry: parts.symmetry.as_ref().map(|o| o.value),
        geom3d: value_of(LaeoComponent::Geom3d),
        geom2d: value_of(LaeoComponent::Geom2d),
        pseudo: value_of(LaeoComponent::Pseudo),
        alpha: coeffs[1],
        beta: coeffs[2],
        exclusions: parts.exclusions,
    };
    Ok((out, breakdown))
}
