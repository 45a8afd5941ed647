//! Training sets: faces with their features and labels, and the mutual-gaze
//! pairs that link them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{face_features, CueNoise, FaceFeatures, TrainError};
use crate::geometry::{camera_to_normalized, GazeAngles};
use crate::losses::PairGeometry;
use crate::scene::{derive_seed, derived_gaze_label, stable_hash, LaeoPair, SceneDataset, SubjectObservation};

#[derive(Clone, Debug, PartialEq)]
pub struct Face {
    pub id: String,
    pub features: FaceFeatures,
    /// True gaze in the face's observed eye-normalized frame, when known.
    pub truth: Option<GazeAngles>,
    /// Supervision target for the aleatoric loss.
    pub label: Option<GazeAngles>,
    /// Label implied by the pair geometry, for mutual-gaze faces.
    pub derived: Option<GazeAngles>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainPair {
    pub geometry: PairGeometry,
    pub faces: [usize; 2],
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainSet {
    pub faces: Vec<Face>,
    pub pairs: Vec<TrainPair>,
    /// Faces with a supervision label.
    pub supervised: Vec<usize>,
}

fn truth_of(subject: &SubjectObservation) -> Result<Option<GazeAngles>, TrainError> {
    match subject.gt_direction() {
        Some(g) => Ok(Some(camera_to_normalized(subject.cyclopean_3d, g)?)),
        None => Ok(None),
    }
}

fn rng_for(seed: u64, id: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stable_hash(id)))
}

impl TrainSet {
    /// Add a mutual-gaze pair; feature noise is keyed by `(seed, frame_id)`.
    pub fn add_pair(&mut self, pair: &LaeoPair, cue: &CueNoise, seed: u64) -> Result<(), TrainError> {
        let geometry = PairGeometry::new(pair)?;
        let (la, lb) = derived_gaze_label(pair)?;
        let mut rng = rng_for(seed, &pair.frame_id);
        let first = self.faces.len();
        for (tag, s, derived) in [("a", &pair.subject_a, la), ("b", &pair.subject_b, lb)] {
            self.faces.push(Face {
                id: format!("{}/{tag}", pair.frame_id),
                features: face_features(s, cue, &mut rng)?,
                truth: truth_of(s)?,
                label: None,
                derived: Some(derived),
            });
        }
        self.pairs.push(TrainPair { geometry, faces: [first, first + 1] });
        Ok(())
    }

    /// Add both subjects of a pair as supervised faces labeled with their
    /// true gaze.
    pub fn add_labeled_pair(&mut self, pair: &LaeoPair, cue: &CueNoise, seed: u64) -> Result<(), TrainError> {
        let mut rng = rng_for(seed, &pair.frame_id);
        for (tag, s) in [("a", &pair.subject_a), ("b", &pair.subject_b)] {
            let truth = truth_of(s)?.ok_or_else(|| {
                TrainError::EmptyData(format!("{}: labeled subject without ground truth", pair.frame_id))
            })?;
            self.supervised.push(self.faces.len());
            self.faces.push(Face {
                id: format!("{}/{tag}", pair.frame_id),
                features: face_features(s, cue, &mut rng)?,
                truth: Some(truth),
                label: Some(truth),
                derived: None,
            });
        }
        Ok(())
    }

    /// Pairs become mutual-gaze pairs and labeled samples supervised faces.
    /// A labeled sample has a single observation, which doubles as its
    /// mirror-loss input.
    pub fn from_dataset(dataset: &SceneDataset, cue: &CueNoise, seed: u64) -> Result<Self, TrainError> {
        let mut set = Self::default();
        for p in &dataset.pairs {
            set.add_pair(p, cue, seed)?;
        }
        for s in &dataset.labeled {
            set.supervised.push(set.faces.len());
            set.faces.push(Face {
                id: s.id.clone(),
                features: FaceFeatures { primary: s.features.clone(), alternate: s.features.clone(), cue_sigma: 0.0 },
                truth: Some(s.gaze),
                label: Some(s.gaze),
                derived: None,
            });
        }
        Ok(set)
    }

    pub fn input_width(&self) -> Option<usize> {
        self.faces.first().map(|f| f.features.primary.width())
    }
}
