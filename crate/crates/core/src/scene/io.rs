//! JSON-lines serialization of scene datasets.
//!
//! Each line is one object with a `kind` field:
//!
//! * `"scene"` (the default when `kind` is absent):
//!   `{frame_id, coords, camera: {focal_px, pp: [x, y], image_size: [w, h]},
//!   subjects: [{eyes_2d: [[lx, ly], [rx, ry]], depth_mm, heading: [x, y, z],
//!   head_box: [x0, y0, x1, y1], body_box: [..], gt_gaze: [pitch, yaw] | null}]}`.
//!   Image points are relative to the principal point when `coords` is
//!   `"centered"` (what the writer emits) and raw pixels when `"raw"`.
//!   `gt_gaze` is in camera coordinates, radians.
//! * `"labeled"`: `{id, features: [..], gaze: [pitch, yaw]}`, gaze in the
//!   eye-normalized frame.
//! * `"provenance"`: the noise model that produced the dataset.
//!
//! The cyclopean points are never stored; they are re-derived and every
//! record is validated on load.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Box2, FocalMode, LabeledSample, LaeoPair, NoiseModel, SceneDataset, SubjectObservation};
use crate::geometry::{CameraIntrinsics, GazeAngles, UnitVec3, Vec2, Vec3};
use crate::trainer::FeatureVector;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum Coords {
    #[default]
    Centered,
    Raw,
}

#[derive(Serialize, Deserialize, Debug)]
struct CameraRecord {
    focal_px: f64,
    pp: [f64; 2],
    image_size: [f64; 2],
}

#[derive(Serialize, Deserialize, Debug)]
struct SubjectRecord {
    eyes_2d: [[f64; 2]; 2],
    depth_mm: f64,
    heading: [f64; 3],
    head_box: [f64; 4],
    body_box: [f64; 4],
    gt_gaze: Option<[f64; 2]>,
}

#[derive(Serialize, Deserialize, Debug)]
struct SceneRecord {
    frame_id: String,
    #[serde(default)]
    coords: Coords,
    camera: CameraRecord,
    subjects: Vec<SubjectRecord>,
}

#[derive(Serialize, Deserialize, Debug)]
struct LabeledRecord {
    id: String,
    features: Vec<f64>,
    gaze: [f64; 2],
}

#[derive(Serialize, Deserialize, Debug)]
struct ProvenanceRecord {
    focal_mode: String,
    eye2d_sigma_px: f64,
    depth_rel_sigma: f64,
    target_offset_mm: f64,
    seed: u64,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Record {
    Scene(SceneRecord),
    Labeled(LabeledRecord),
    Provenance(ProvenanceRecord),
}

fn v2(a: [f64; 2]) -> Vec2<f64> {
    Vec2::new(a[0], a[1])
}

fn a2(v: Vec2<f64>) -> [f64; 2] {
    [v.x, v.y]
}

fn box_record(b: &Box2) -> [f64; 4] {
    [b.min.x, b.min.y, b.max.x, b.max.y]
}

fn scene_record(pair: &LaeoPair) -> SceneRecord {
    let subject = |s: &SubjectObservation| SubjectRecord {
        eyes_2d: [a2(s.left_eye_2d), a2(s.right_eye_2d)],
        depth_mm: s.depth_mm,
        heading: s.heading.as_vec().to_array(),
        head_box: box_record(&s.head_box),
        body_box: box_record(&s.body_box),
        gt_gaze: s.gt_gaze.map(|g| [g.pitch, g.yaw]),
    };
    SceneRecord {
        frame_id: pair.frame_id.clone(),
        coords: Coords::Centered,
        camera: CameraRecord {
            focal_px: pair.camera.focal_px,
            pp: a2(pair.camera.principal_point),
            image_size: a2(pair.camera.image_size),
        },
        subjects: vec![subject(&pair.subject_a), subject(&pair.subject_b)],
    }
}

fn pair_from_record(r: SceneRecord) -> Result<LaeoPair, String> {
    let camera = CameraIntrinsics::new(r.camera.focal_px, v2(r.camera.pp), v2(r.camera.image_size))
        .map_err(|e| e.to_string())?;
    let to_centered = |p: [f64; 2]| match r.coords {
        Coords::Centered => v2(p),
        Coords::Raw => camera.to_centered(v2(p)),
    };
    let to_box = |b: [f64; 4]| Box2::new(to_centered([b[0], b[1]]), to_centered([b[2], b[3]]));
    if r.subjects.len() != 2 {
        return Err(format!("expected 2 subjects, found {}", r.subjects.len()));
    }
    let mut subjects = Vec::with_capacity(2);
    for (name, s) in ["A", "B"].iter().zip(&r.subjects) {
        let h = Vec3::from_array(s.heading);
        if !h.is_finite() || (h.norm() - 1.0).abs() > 1e-6 {
            return Err(format!("subject {name}: heading is not a unit vector"));
        }
        let obs = SubjectObservation::new(
            to_centered(s.eyes_2d[0]),
            to_centered(s.eyes_2d[1]),
            s.depth_mm,
            UnitVec3::new_unchecked(h),
            to_box(s.head_box),
            to_box(s.body_box),
            s.gt_gaze.map(|g| GazeAngles::new(g[0], g[1])),
            &camera,
        )
        .map_err(|e| format!("subject {name}: {e}"))?;
        subjects.push(obs);
    }
    let subject_b = subjects.pop().expect("two subjects");
    let subject_a = subjects.pop().expect("two subjects");
    let pair = LaeoPair { subject_a, subject_b, camera, frame_id: r.frame_id };
    pair.validate().map_err(|e| e.to_string())?;
    Ok(pair)
}

fn focal_mode_name(m: FocalMode) -> &'static str {
    match m {
        FocalMode::Exact => "exact",
        FocalMode::MaxImageDim => "max-image-dim",
    }
}

/// Write a dataset as JSON lines: provenance first, then scenes, then
/// labeled samples.
pub fn write_dataset(dataset: &SceneDataset, mut out: impl Write) -> Result<(), DatasetError> {
    let mut emit = |r: Record| -> Result<(), DatasetError> {
        serde_json::to_writer(&mut out, &r)?;
        out.write_all(b"\n")?;
        Ok(())
    };
    if let Some(n) = &dataset.provenance {
        emit(Record::Provenance(ProvenanceRecord {
            focal_mode: focal_mode_name(n.focal_mode).into(),
            eye2d_sigma_px: n.eye2d_sigma_px,
            depth_rel_sigma: n.depth_rel_sigma,
            target_offset_mm: n.target_offset_mm,
            seed: n.seed,
        }))?;
    }
    for p in &dataset.pairs {
        emit(Record::Scene(scene_record(p)))?;
    }
    for s in &dataset.labeled {
        emit(Record::Labeled(LabeledRecord {
            id: s.id.clone(),
            features: s.features.0.clone(),
            gaze: [s.gaze.pitch, s.gaze.yaw],
        }))?;
    }
    Ok(())
}

/// A loaded dataset together with non-fatal warnings.
#[derive(Debug)]
pub struct Loaded {
    pub dataset: SceneDataset,
    pub warnings: Vec<String>,
}

/// Parse and validate a JSON-lines dataset. Blank lines are skipped; the
/// first invalid record aborts with its 1-based line number.
pub fn read_dataset(input: impl BufRead) -> Result<Loaded, DatasetError> {
    let mut dataset = SceneDataset::default();
    let mut seen = std::collections::HashSet::new();
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let invalid = |message: String| DatasetError::Invalid { line: line_no, message };
        let mut value: serde_json::Value = serde_json::from_str(&line).map_err(|e| invalid(e.to_string()))?;
        if let Some(obj) = value.as_object_mut() {
            obj.entry("kind").or_insert_with(|| "scene".into());
        }
        let record: Record = serde_json::from_value(value).map_err(|e| invalid(e.to_string()))?;
        let id = match record {
            Record::Scene(r) => {
                let pair = pair_from_record(r).map_err(invalid)?;
                let id = pair.frame_id.clone();
                dataset.pairs.push(pair);
                id
            }
            Record::Labeled(r) => {
                if !(r.gaze[0].is_finite() && r.gaze[1].is_finite()) {
                    return Err(invalid("labeled gaze is not finite".into()));
                }
                dataset.labeled.push(LabeledSample {
                    id: r.id.clone(),
                    features: FeatureVector(r.features),
                    gaze: GazeAngles::new(r.gaze[0], r.gaze[1]),
                });
                r.id
            }
            Record::Provenance(r) => {
                let focal_mode = match r.focal_mode.as_str() {
                    "exact" => FocalMode::Exact,
                    "max-image-dim" => FocalMode::MaxImageDim,
                    other => return Err(invalid(format!("unknown focal mode {other:?}"))),
                };
                let noise = NoiseModel {
                    focal_mode,
                    eye2d_sigma_px: r.eye2d_sigma_px,
                    depth_rel_sigma: r.depth_rel_sigma,
                    target_offset_mm: r.target_offset_mm,
                    seed: r.seed,
                };
                noise.validate().map_err(|e| invalid(e.to_string()))?;
                dataset.provenance = Some(noise);
                continue;
            }
        };
        if !seen.insert(id.clone()) {
            return Err(invalid(format!("duplicate identifier {id:?}")));
        }
    }
    let mut warnings = Vec::new();
    if dataset.pairs.is_empty() && dataset.labeled.is_empty() {
        warnings.push("dataset contains no records".to_string());
    }
    Ok(Loaded { dataset, warnings })
}

/// Read a dataset file.
pub fn load_dataset(path: &std::path::Path) -> Result<Loaded, DatasetError> {
    let file =
        std::fs::File::open(path).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    read_dataset(std::io::BufReader::new(file))
}

/// Write a dataset file.
pub fn save_dataset(dataset: &SceneDataset, path: &std::path::Path) -> Result<(), DatasetError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_dataset(dataset, &mut w)?;
    w.flush()?;
    Ok(())
}
