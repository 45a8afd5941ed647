//! How much geometric approximation corrupts labels derived from mutual gaze.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    corrupt, derive_seed, derived_gaze_vectors, random_perpendicular, stable_hash, synth_scene, FocalMode, LaeoPair,
    NoiseModel, SceneError, SynthConfig,
};
use crate::geometry::{angle_between, Vec3};

#[derive(Clone, Debug, PartialEq)]
pub struct LabelStudyConfig {
    pub synth: SynthConfig,
    pub n_scenes: usize,
    pub seed: u64,
}

impl Default for LabelStudyConfig {
    fn default() -> Self {
        Self { synth: SynthConfig::default(), n_scenes: 1000, seed: 42 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabelStudyRow {
    pub rung: String,
    pub mean_err_deg: f64,
    pub std_err_deg: f64,
    pub mean_rel_dz: f64,
}

impl NoiseModel {
    /// Compact description used as the study row label.
    pub fn label(&self) -> String {
        let focal = match self.focal_mode {
            FocalMode::Exact => "exact",
            FocalMode::MaxImageDim => "max-image-dim",
        };
        format!(
            "focal={focal};eye_px={};depth={};offset_mm={}",
            self.eye2d_sigma_px, self.depth_rel_sigma, self.target_offset_mm
        )
    }
}

/// Approximations removed one at a time: approximate focal length, then
/// exact focal, then exact eye positions, then exact depth. All rungs share
/// a seed so they see the same underlying random draws.
pub fn standard_ladder(seed: u64) -> Vec<NoiseModel> {
    let base = NoiseModel {
        focal_mode: FocalMode::MaxImageDim,
        eye2d_sigma_px: 3.0,
        depth_rel_sigma: 0.1,
        target_offset_mm: 0.0,
        seed,
    };
    vec![
        base.clone(),
        NoiseModel { focal_mode: FocalMode::Exact, ..base.clone() },
        NoiseModel { focal_mode: FocalMode::Exact, eye2d_sigma_px: 0.0, ..base },
        NoiseModel::exact(seed),
    ]
}

/// Mean angular error between labels derived from corrupted geometry and
/// the true gaze, over both subjects of `config.n_scenes` synthetic pairs.
pub fn label_error_study(config: &LabelStudyConfig, ladder: &[NoiseModel]) -> Result<Vec<LabelStudyRow>, SceneError> {
    if ladder.is_empty() {
        return Err(SceneError::InvalidSubject("noise ladder is empty".into()));
    }
    let scenes = (0..config.n_scenes as u64)
        .map(|i| synth_scene(&config.synth, derive_seed(config.seed, i)))
        .collect::<Result<Vec<_>, _>>()?;
    ladder.iter().map(|noise| study_rung(&scenes, noise)).collect()
}

fn study_rung(scenes: &[LaeoPair], noise: &NoiseModel) -> Result<LabelStudyRow, SceneError> {
    let mut errors = Vec::with_capacity(2 * scenes.len());
    let mut rel_dz = 0.0;
    for pair in scenes {
        let noisy = corrupt(pair, noise)?;
        let (la, lb) = derived_gaze_vectors(&noisy)?;
        let [ta, tb] = true_gaze(pair, noise);
        errors.push(angle_between(la.as_vec(), ta).to_degrees());
        errors.push(angle_between(lb.as_vec(), tb).to_degrees());
        for (o, n) in [(&pair.subject_a, &noisy.subject_a), (&pair.subject_b, &noisy.subject_b)] {
            rel_dz += (n.depth_mm - o.depth_mm).abs() / o.depth_mm;
        }
    }
    let n = errors.len().max(1) as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
    Ok(LabelStudyRow { rung: noise.label(), mean_err_deg: mean, std_err_deg: var.sqrt(), mean_rel_dz: rel_dz / n })
}

/// True gaze directions; with a target offset each subject looks at a point
/// displaced sideways from the other's cyclopean eye.
fn true_gaze(pair: &LaeoPair, noise: &NoiseModel) -> [Vec3<f64>; 2] {
    let a = pair.subject_a.cyclopean_3d;
    let b = pair.subject_b.cyclopean_3d;
    if noise.target_offset_mm == 0.0 {
        return [b - a, a - b];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(noise.seed ^ 0x5EED_0FF5, stable_hash(&pair.frame_id)));
    let ab = (b - a).scale(1.0 / (b - a).norm());
    let pa = random_perpendicular(ab, &mut rng);
    let pb = random_perpendicular(-ab, &mut rng);
    [b + pa.scale(noise.target_offset_mm) - a, a + pb.scale(noise.target_offset_mm) - b]
}

/// Worst-case error, in degrees, from assuming the gaze target is the
/// cyclopean eye when it is actually `target_offset_mm` away from it.
pub fn eye_center_assumption_error(target_offset_mm: f64, separation_mm: f64) -> f64 {
    (target_offset_mm / separation_mm).atan().to_degrees()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> LabelStudyConfig {
        LabelStudyConfig { n_scenes: 200, ..Default::default() }
    }

    #[test]
    fn eye_center_error_oracle() {
        assert_eq!(eye_center_assumption_error(0.0, 800.0), 0.0);
        let e = eye_center_assumption_error(37.5, 500.0);
        assert!((e - 4.29).abs() < 0.01, "{e}");
        let mut prev = f64::INFINITY;
        for sep in [500.0, 750.0, 1000.0, 2000.0, 4000.0] {
            let e = eye_center_assumption_error(37.5, sep);
            assert!(e < prev);
            prev = e;
        }
    }

    #[test]
    fn ladder_is_strictly_decreasing_to_zero() {
        let rows = label_error_study(&small(), &standard_ladder(42)).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].mean_err_deg < w[0].mean_err_deg, "{rows:?}");
        }
        assert!(rows.last().unwrap().mean_err_deg < 1e-9);
    }

    #[test]
    fn more_depth_noise_hurts_more() {
        let rows =
            label_error_study(&small(), &[NoiseModel::depth_only(0.1, 42), NoiseModel::depth_only(0.5, 42)]).unwrap();
        assert!(rows[1].mean_err_deg > rows[0].mean_err_deg);
        assert!(rows[1].mean_rel_dz > rows[0].mean_rel_dz);
    }

    #[test]
    fn target_offset_error_is_bounded_by_the_worst_case() {
        let offset = NoiseModel { target_offset_mm: 37.5, ..NoiseModel::exact(1) };
        let rows = label_error_study(&small(), &[offset]).unwrap();
        let bound = eye_center_assumption_error(37.5, 500.0);
        assert!(rows[0].mean_err_deg > 0.0 && rows[0].mean_err_deg < bound, "{rows:?}");
    }

    #[test]
    fn study_is_deterministic_and_rejects_empty_ladders() {
        let a = label_error_study(&small(), &standard_ladder(3)).unwrap();
        let b = label_error_study(&small(), &standard_ladder(3)).unwrap();
        assert_eq!(a, b);
        assert!(label_error_study(&small(), &[]).is_err());
    }
}
