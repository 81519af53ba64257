//! Adapter for DAIR-V2X style infrastructure labels.
//!
//! One JSON array per frame in the label directory, named by frame number
//! (`000123.json`). Each entry carries `type`, `3d_dimensions {h, w, l}`,
//! `3d_location {x, y, z}` (box center), `rotation` (yaw, radians) and an
//! optional `track_id`; numbers may be given as strings. The calibration
//! directory holds a file of the same name with `rotation` (3×3) and
//! `translation` (3×1) mapping the sensor frame into the common frame.
//! Frames are assumed to be 10 Hz for timestamps.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{normalize_yaw, Box3D, FrameRecord, ObjectClass, ObjectRecord};

use super::read_to_string;

const FRAME_PERIOD_US: i64 = 100_000;

/// Map a source class name onto the four evaluated classes.
pub fn map_dair_class(name: &str) -> Option<ObjectClass> {
    match name.to_ascii_lowercase().as_str() {
        "pedestrian" => Some(ObjectClass::Pedestrian),
        "bicycle" | "cyclist" | "scooter" | "motorcyclist" => Some(ObjectClass::Bike),
        "car" | "van" => Some(ObjectClass::Car),
        "truck" | "bus" => Some(ObjectClass::Truck),
        _ => None,
    }
}

fn parse_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg: msg.into(),
    }
}

fn num(v: &Value, path: &Path, what: &str) -> Result<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
    .filter(|x: &f64| x.is_finite())
    .ok_or_else(|| parse_err(path, format!("{what}: expected a number")))
}

fn field<'a>(v: &'a Value, key: &str, path: &Path) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| parse_err(path, format!("missing field {key}")))
}

struct Calib {
    r: [[f64; 3]; 3],
    t: [f64; 3],
}

fn load_calib(path: &Path) -> Result<Calib> {
    let v: Value = serde_json::from_str(&read_to_string(path)?).map_err(|e| parse_err(path, e.to_string()))?;
    let mut r = [[0.0; 3]; 3];
    let rows = field(&v, "rotation", path)?
        .as_array()
        .filter(|a| a.len() == 3)
        .ok_or_else(|| parse_err(path, "rotation must be 3x3"))?;
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().filter(|a| a.len() == 3).ok_or_else(|| parse_err(path, "rotation must be 3x3"))?;
        for (j, x) in row.iter().enumerate() {
            r[i][j] = num(x, path, "rotation")?;
        }
    }
    let tv = field(&v, "translation", path)?
        .as_array()
        .filter(|a| a.len() == 3)
        .ok_or_else(|| parse_err(path, "translation must have 3 entries"))?;
    let mut t = [0.0; 3];
    for (i, x) in tv.iter().enumerate() {
        // accept [[x],[y],[z]] and [x,y,z]
        let x = x.as_array().and_then(|a| a.first()).unwrap_or(x);
        t[i] = num(x, path, "translation")?;
    }
    Ok(Calib { r, t })
}

fn frame_number(path: &Path) -> Result<u64> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err(path, "file name is not a frame number"))
}

fn convert(entry: &Value, calib: &Calib, path: &Path) -> Result<ObjectRecord> {
    let name = field(entry, "type", path)?
        .as_str()
        .ok_or_else(|| parse_err(path, "type must be a string"))?;
    let cls = map_dair_class(name).ok_or_else(|| parse_err(path, format!("unknown class {name}")))?;
    let dims = field(entry, "3d_dimensions", path)?;
    let loc = field(entry, "3d_location", path)?;
    let p = [
        num(field(loc, "x", path)?, path, "x")?,
        num(field(loc, "y", path)?, path, "y")?,
        num(field(loc, "z", path)?, path, "z")?,
    ];
    let c = calib;
    let world: Vec<f64> = (0..3).map(|i| (0..3).map(|j| c.r[i][j] * p[j]).sum::<f64>() + c.t[i]).collect();
    let yaw = num(field(entry, "rotation", path)?, path, "rotation")? + c.r[1][0].atan2(c.r[0][0]);
    let track_id = match entry.get("track_id") {
        None | Some(Value::Null) => None,
        Some(v) => Some(num(v, path, "track_id")? as u64),
    };
    Ok(ObjectRecord {
        cls,
        bbox: Box3D {
            center_x: world[0],
            center_y: world[1],
            center_z: world[2],
            length: num(field(dims, "l", path)?, path, "l")?,
            width: num(field(dims, "w", path)?, path, "w")?,
            height: num(field(dims, "h", path)?, path, "h")?,
            yaw: normalize_yaw(yaw),
        },
        score: None,
        track_id,
    })
}

/// Load ground-truth frames, ordered by frame number.
pub fn load_labels_dair(labels_dir: &Path, calib_dir: &Path) -> Result<Vec<FrameRecord>> {
    let mut files: Vec<PathBuf> = fs::read_dir(labels_dir)
        .map_err(|e| Error::io(labels_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    if files.is_empty() {
        return Err(Error::Missing(format!("no frames found in {}", labels_dir.display())));
    }
    let mut frames = Vec::with_capacity(files.len());
    files.sort();
    for f in files {
        let idx = frame_number(&f)?;
        let calib_path = calib_dir.join(f.file_name().unwrap_or_default());
        if !calib_path.exists() {
            return Err(Error::Missing(format!("calibration {} for frame {idx}", calib_path.display())));
        }
        let calib = load_calib(&calib_path)?;
        let v: Value = serde_json::from_str(&read_to_string(&f)?).map_err(|e| parse_err(&f, e.to_string()))?;
        let entries = v.as_array().ok_or_else(|| parse_err(&f, "expected an array of objects"))?;
        let objects = entries.iter().map(|e| convert(e, &calib, &f)).collect::<Result<Vec<_>>>()?;
        frames.push(FrameRecord::new(idx, idx as i64 * FRAME_PERIOD_US, objects));
    }
    frames.sort_by_key(|f| f.frame_index);
    Ok(frames)
}
