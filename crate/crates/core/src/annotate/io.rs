//! JSON-lines serialization of multi-view frames.
//!
//! One object per line:
//! `{kind: "multiview", frame_id, n_subjects, truth: [a, b] | null,
//! views: [{view_id, world_to_camera: [[..], [..], [..]], subjects: [null |
//! {gaze: [x, y, z], eye_world: [x, y, z], frontalness_rad,
//! face_box: [x0, y0, x1, y1] | null, body_box: [..] | null}]}]}`.
//! `gaze` is in the view's camera frame; non-unit vectors are normalized on
//! load.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{MultiViewFrame, SubjectView, ViewEstimate};
use crate::geometry::{Mat3, UnitVec3, Vec2, Vec3};
use crate::scene::io::DatasetError;
use crate::scene::Box2;

#[derive(Serialize, Deserialize, Debug)]
struct SubjectRecord {
    gaze: [f64; 3],
    eye_world: [f64; 3],
    frontalness_rad: f64,
    face_box: Option<[f64; 4]>,
    body_box: Option<[f64; 4]>,
}

#[derive(Serialize, Deserialize, Debug)]
struct ViewRecord {
    view_id: String,
    world_to_camera: [[f64; 3]; 3],
    subjects: Vec<Option<SubjectRecord>>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(tag = "kind", rename = "multiview")]
struct FrameRecord {
    frame_id: String,
    n_subjects: usize,
    truth: Option<[usize; 2]>,
    views: Vec<ViewRecord>,
}

fn box_record(b: &Box2) -> [f64; 4] {
    [b.min.x, b.min.y, b.max.x, b.max.y]
}

fn to_box(b: [f64; 4]) -> Box2 {
    Box2::new(Vec2::new(b[0], b[1]), Vec2::new(b[2], b[3]))
}

fn frame_record(f: &MultiViewFrame) -> FrameRecord {
    let subject = |s: &SubjectView| SubjectRecord {
        gaze: s.gaze.as_vec().to_array(),
        eye_world: s.eye_world.to_array(),
        frontalness_rad: s.frontalness_rad,
        face_box: s.face_box.as_ref().map(box_record),
        body_box: s.body_box.as_ref().map(box_record),
    };
    FrameRecord {
        frame_id: f.frame_id.clone(),
        n_subjects: f.n_subjects,
        truth: f.truth.map(|(a, b)| [a, b]),
        views: f
            .views
            .iter()
            .map(|v| ViewRecord {
                view_id: v.view_id.clone(),
                world_to_camera: v.world_to_camera.rows,
                subjects: v.subjects.iter().map(|s| s.as_ref().map(subject)).collect(),
            })
            .collect(),
    }
}

fn frame_from_record(r: FrameRecord) -> Result<MultiViewFrame, String> {
    let mut views = Vec::with_capacity(r.views.len());
    for v in r.views {
        let mut subjects = Vec::with_capacity(v.subjects.len());
        for s in v.subjects {
            let Some(s) = s else {
                subjects.push(None);
                continue;
            };
            let g = Vec3::from_array(s.gaze);
            let gaze = if (g.norm() - 1.0).abs() <= 1e-12 {
                UnitVec3::new_unchecked(g)
            } else {
                UnitVec3::normalize(g).ok_or_else(|| format!("view {}: zero gaze vector", v.view_id))?
            };
            subjects.push(Some(SubjectView {
                gaze,
                eye_world: Vec3::from_array(s.eye_world),
                frontalness_rad: s.frontalness_rad,
                face_box: s.face_box.map(to_box),
                body_box: s.body_box.map(to_box),
            }));
        }
        let view = ViewEstimate { view_id: v.view_id, world_to_camera: Mat3::from_rows(v.world_to_camera), subjects };
        view.validate(r.n_subjects).map_err(|e| e.to_string())?;
        views.push(view);
    }
    if let Some([a, b]) = r.truth {
        if a == b || a.max(b) >= r.n_subjects {
            return Err(format!("truth pair ({a}, {b}) out of range"));
        }
    }
    Ok(MultiViewFrame {
        frame_id: r.frame_id,
        n_subjects: r.n_subjects,
        views,
        truth: r.truth.map(|[a, b]| (a.min(b), a.max(b))),
    })
}

pub fn write_frames(frames: &[MultiViewFrame], mut out: impl Write) -> Result<(), DatasetError> {
    for f in frames {
        serde_json::to_writer(&mut out, &frame_record(f))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Parse and validate frames; the first bad line is reported by number.
pub fn read_frames(input: impl BufRead) -> Result<Vec<MultiViewFrame>, DatasetError> {
    let mut frames = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let invalid = |message: String| DatasetError::Invalid { line: i + 1, message };
        let record: FrameRecord = serde_json::from_str(&line).map_err(|e| invalid(e.to_string()))?;
        frames.push(frame_from_record(record).map_err(invalid)?);
    }
    Ok(frames)
}
