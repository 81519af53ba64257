//! JSON-lines frame files: one frame object per line.
//!
//! `{"frame":0,"ts_us":0,"objects":[{"cls":"car","x":..,"y":..,"z":..,
//! "l":..,"w":..,"h":..,"yaw":..,"score":..,"track_id":..}]}` with yaw in
//! radians; `score` and `track_id` are optional.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{normalize_yaw, Box3D, FrameRecord, ObjectClass, ObjectRecord};

use super::{read_to_string, round_sig, write_atomic};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectLine {
    cls: ObjectClass,
    x: f64,
    y: f64,
    z: f64,
    l: f64,
    w: f64,
    h: f64,
    yaw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    track_id: Option<u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameLine {
    frame: u64,
    ts_us: i64,
    objects: Vec<ObjectLine>,
}

fn to_record(line: FrameLine, path: &Path, lineno: usize) -> FrameRecord {
    let objects = line
        .objects
        .into_iter()
        .map(|o| {
            let score = o.score.map(|s| {
                if (0.0..=1.0).contains(&s) {
                    s
                } else {
                    log::warn!("{}:{lineno}: score {s} clamped to [0, 1]", path.display());
                    s.clamp(0.0, 1.0)
                }
            });
            ObjectRecord {
                cls: o.cls,
                bbox: Box3D {
                    center_x: o.x,
                    center_y: o.y,
                    center_z: o.z,
                    length: o.l,
                    width: o.w,
                    height: o.h,
                    yaw: normalize_yaw(o.yaw),
                },
                score,
                track_id: o.track_id,
            }
        })
        .collect();
    FrameRecord::new(line.frame, line.ts_us, objects)
}

/// Parse JSONL text; `path` only labels error messages. Blank lines are
/// skipped. Record invariants are left to `validate_frames`.
pub fn parse_frames_jsonl(text: &str, path: &Path) -> Result<Vec<FrameRecord>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let line: FrameLine = serde_json::from_str(raw).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            msg: e.to_string(),
        })?;
        out.push(to_record(line, path, lineno));
    }
    Ok(out)
}

pub fn load_frames_jsonl(path: &Path) -> Result<Vec<FrameRecord>> {
    parse_frames_jsonl(&read_to_string(path)?, path)
}

/// Serialize frames, numbers rounded to 9 significant digits.
pub fn format_frames_jsonl(frames: &[FrameRecord]) -> String {
    let mut out = String::new();
    for f in frames {
        let line = FrameLine {
            frame: f.frame_index,
            ts_us: f.timestamp_us,
            objects: f
                .objects
                .iter()
                .map(|o| ObjectLine {
                    cls: o.cls,
                    x: round_sig(o.bbox.center_x),
                    y: round_sig(o.bbox.center_y),
                    z: round_sig(o.bbox.center_z),
                    l: round_sig(o.bbox.length),
                    w: round_sig(o.bbox.width),
                    h: round_sig(o.bbox.height),
                    yaw: round_sig(o.bbox.yaw),
                    score: o.score.map(round_sig),
                    track_id: o.track_id,
                })
                .collect(),
        };
        out.push_str(&serde_json::to_string(&line).expect("frame lines always serialize"));
        out.push('\n');
    }
    out
}

pub fn write_frames_jsonl(path: &Path, frames: &[FrameRecord]) -> Result<()> {
    write_atomic(path, format_frames_jsonl(frames).as_bytes())
}
