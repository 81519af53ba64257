//! Point clouds as little-endian `f32` x, y, z, intensity records with a
//! JSON sidecar (`<file>.json`) carrying the point count and optional layer
//! ids; images as 8-bit RGB PNG.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ladder::{CalibrationSet, CloudPoint, PointCloud, RasterImage};

use super::{read_to_string, write_atomic};

pub const CLOUD_FORMAT: &str = "xyzi-f32-le";
const RECORD_BYTES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudDescriptor {
    pub format: String,
    pub points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer_ids: Option<Vec<u32>>,
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn not_found_is_missing(e: Error, what: &str, path: &Path) -> Error {
    match e {
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
            Error::Missing(format!("{what} {}", path.display()))
        }
        other => other,
    }
}

/// Read a cloud; the sidecar is optional.
pub fn read_cloud(path: &Path) -> Result<PointCloud> {
    let bytes = fs::read(path).map_err(|e| not_found_is_missing(Error::io(path, e), "point cloud", path))?;
    if bytes.len() % RECORD_BYTES != 0 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: format!("size {} is not a multiple of {RECORD_BYTES}", bytes.len()),
        });
    }
    let points: Vec<CloudPoint> = bytes
        .chunks_exact(RECORD_BYTES)
        .map(|c| {
            let f = |i: usize| f32::from_le_bytes([c[i], c[i + 1], c[i + 2], c[i + 3]]);
            CloudPoint::new(f(0), f(4), f(8), f(12))
        })
        .collect();
    let side = sidecar(path);
    if !side.exists() {
        return Ok(PointCloud::new(points));
    }
    let desc: CloudDescriptor = serde_json::from_str(&read_to_string(&side)?).map_err(|e| Error::Parse {
        path: side.clone(),
        line: e.line(),
        msg: e.to_string(),
    })?;
    if desc.format != CLOUD_FORMAT {
        return Err(Error::invalid(format!("{}: unsupported format {}", side.display(), desc.format)));
    }
    if desc.points != points.len() {
        return Err(Error::invalid(format!(
            "{}: sidecar lists {} points, file has {}",
            side.display(),
            desc.points,
            points.len()
        )));
    }
    match desc.layer_ids {
        Some(ids) => PointCloud::with_layers(points, ids),
        None => Ok(PointCloud::new(points)),
    }
}

/// Write a cloud and its sidecar.
pub fn write_cloud(path: &Path, cloud: &PointCloud) -> Result<()> {
    let mut bytes = Vec::with_capacity(cloud.len() * RECORD_BYTES);
    for p in &cloud.points {
        for v in [p.x, p.y, p.z, p.intensity] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    write_atomic(path, &bytes)?;
    let desc = CloudDescriptor {
        format: CLOUD_FORMAT.into(),
        points: cloud.len(),
        layer_ids: cloud.layer_ids.clone(),
    };
    let mut text = serde_json::to_string(&desc).expect("descriptor serializes");
    text.push('\n');
    write_atomic(&sidecar(path), text.as_bytes())
}

pub fn read_png(path: &Path) -> Result<RasterImage> {
    if !path.exists() {
        return Err(Error::Missing(format!("image {}", path.display())));
    }
    let img = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()?
        .into_rgb8();
    RasterImage::new(img.width(), img.height(), img.into_raw())
}

pub fn write_png(path: &Path, img: &RasterImage) -> Result<()> {
    let mut buf = std::io::Cursor::new(Vec::new());
    image::write_buffer_with_format(
        &mut buf,
        &img.data,
        img.width,
        img.height,
        image::ExtendedColorType::Rgb8,
        image::ImageFormat::Png,
    )?;
    write_atomic(path, buf.get_ref())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibrationFile {
    intrinsics: [[f64; 3]; 3],
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
}

/// Read `{"intrinsics": 3x3, "rotation": 3x3, "translation": [x, y, z]}`,
/// the lidar-to-camera transform plus pinhole intrinsics.
pub fn read_calibration(path: &Path) -> Result<CalibrationSet> {
    let text = read_to_string(path).map_err(|e| not_found_is_missing(e, "calibration", path))?;
    let c: CalibrationFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        msg: e.to_string(),
    })?;
    CalibrationSet::new(c.intrinsics, c.rotation, c.translation)
}
