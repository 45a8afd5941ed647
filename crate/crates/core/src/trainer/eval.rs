//! Angular error and the uncertainty–error rank correlation.

use serde::Serialize;

use super::{PredictorParams, TrainError, TrainSet};
use crate::geometry::{angle_between, angles_to_vector, GazeAngles};

/// Angle in degrees between the 3D directions of two gaze angle pairs.
pub fn angular_error_deg(a: GazeAngles, b: GazeAngles) -> f64 {
    angle_between(angles_to_vector(a).as_vec(), angles_to_vector(b).as_vec()).to_degrees()
}

/// Ranks starting at 1; tied values share the mean of their ranks.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman's rank correlation. `None` when either input is constant (or
/// fewer than two samples), where the coefficient is undefined.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "spearman inputs differ in length");
    if x.len() < 2 {
        return None;
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Evaluation {
    pub samples: usize,
    pub mean_error_deg: f64,
    /// Mean error against the geometry-derived labels, over faces that have
    /// one.
    pub mean_label_error_deg: Option<f64>,
    /// 0 when undefined; see `spearman_defined`.
    pub spearman: f64,
    pub spearman_defined: bool,
}

/// Evaluate every face with a known true gaze.
pub fn evaluate(params: &PredictorParams, set: &TrainSet) -> Result<Evaluation, TrainError> {
    let mut errors = Vec::new();
    let mut sigmas = Vec::new();
    let mut label_errors = Vec::new();
    for (i, face) in set.faces.iter().enumerate() {
        let Some(truth) = face.truth else { continue };
        let pred = params.forward(i, &face.features.primary, false)?;
        errors.push(angular_error_deg(pred.angles, truth));
        sigmas.push(pred.log_sigma);
        if let Some(d) = face.derived {
            label_errors.push(angular_error_deg(pred.angles, d));
        }
    }
    if errors.is_empty() {
        return Err(TrainError::EmptyData("no faces with ground truth to evaluate".into()));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    // log σ is monotone in σ, so the ranks are those of σ̂
    let rho = spearman(&sigmas, &errors);
    Ok(Evaluation {
        samples: errors.len(),
        mean_error_deg: mean(&errors),
        mean_label_error_deg: (!label_errors.is_empty()).then(|| mean(&label_errors)),
        spearman: rho.unwrap_or(0.0),
        spearman_defined: rho.is_some(),
    })
}
