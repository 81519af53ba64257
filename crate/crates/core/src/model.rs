//! Shared domain types: boxes, object/frame/sequence records, sensor and
//! machine descriptions, timing records and setup identifiers.
//!
//! Conventions: +z is up, yaw is measured counter-clockwise from +x and is
//! kept in radians in (-pi, pi]. Anything read from files in degrees is
//! converted when parsed.

use std::collections::HashSet;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four reduced object classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectClass {
    Pedestrian,
    Bike,
    Car,
    Truck,
}

impl ObjectClass {
    pub const ALL: [ObjectClass; 4] = [
        ObjectClass::Pedestrian,
        ObjectClass::Bike,
        ObjectClass::Car,
        ObjectClass::Truck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectClass::Pedestrian => "pedestrian",
            ObjectClass::Bike => "bike",
            ObjectClass::Car => "car",
            ObjectClass::Truck => "truck",
        }
    }
}

impl fmt::Display for ObjectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObjectClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pedestrian" => Ok(ObjectClass::Pedestrian),
            "bike" => Ok(ObjectClass::Bike),
            "car" => Ok(ObjectClass::Car),
            "truck" => Ok(ObjectClass::Truck),
            other => Err(Error::invalid(format!("unknown class \"{other}\""))),
        }
    }
}

/// Wrap an angle into (-pi, pi].
pub fn normalize_yaw(yaw: f64) -> f64 {
    let y = yaw.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

/// Upright oriented 3D box. Dimensions in meters, yaw in radians about +z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3D {
    pub center_x: f64,
    pub center_y: f64,
    pub center_z: f64,
    pub length: f64,
    pub width: f64,
    pub height: f64,
    pub yaw: f64,
}

impl Box3D {
    /// Validating constructor; normalizes yaw.
    pub fn new(
        center: [f64; 3],
        length: f64,
        width: f64,
        height: f64,
        yaw: f64,
    ) -> Result<Self> {
        let b = Box3D {
            center_x: center[0],
            center_y: center[1],
            center_z: center[2],
            length,
            width,
            height,
            yaw: normalize_yaw(yaw),
        };
        match b.problem() {
            None => Ok(b),
            Some(p) => Err(Error::invalid(p)),
        }
    }

    /// Axis-aligned box centered at `center` with yaw 0.
    pub fn cube(center: [f64; 3], side: f64) -> Self {
        Box3D {
            center_x: center[0],
            center_y: center[1],
            center_z: center[2],
            length: side,
            width: side,
            height: side,
            yaw: 0.0,
        }
    }

    fn problem(&self) -> Option<String> {
        let coords = [self.center_x, self.center_y, self.center_z, self.yaw];
        if coords.iter().any(|v| !v.is_finite()) {
            return Some("box has non-finite center or yaw".into());
        }
        for (name, v) in [("length", self.length), ("width", self.width), ("height", self.height)] {
            if !(v.is_finite() && v > 0.0) {
                return Some(format!("box {name} must be > 0, got {v}"));
            }
        }
        None
    }

    pub fn volume(&self) -> f64 {
        self.length * self.width * self.height
    }

    pub fn z_min(&self) -> f64 {
        self.center_z - self.height / 2.0
    }

    pub fn z_max(&self) -> f64 {
        self.center_z + self.height / 2.0
    }

    /// Same box moved by `(dx, dy, dz)` and turned by `dyaw` about the origin.
    pub fn rigid_transform(&self, dyaw: f64, dx: f64, dy: f64, dz: f64) -> Box3D {
        let (s, c) = dyaw.sin_cos();
        Box3D {
            center_x: c * self.center_x - s * self.center_y + dx,
            center_y: s * self.center_x + c * self.center_y + dy,
            center_z: self.center_z + dz,
            yaw: normalize_yaw(self.yaw + dyaw),
            ..*self
        }
    }
}

/// Ground-plane footprint corners, counter-clockwise, rotated by yaw about
/// the box center.
pub fn bev_corners(b: &Box3D) -> [[f64; 2]; 4] {
    let (hl, hw) = (b.length / 2.0, b.width / 2.0);
    let (s, c) = normalize_yaw(b.yaw).sin_cos();
    let local = [[hl, -hw], [hl, hw], [-hl, hw], [-hl, -hw]];
    local.map(|[x, y]| [b.center_x + c * x - s * y, b.center_y + s * x + c * y])
}

/// One annotated or predicted object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub cls: ObjectClass,
    pub bbox: Box3D,
    /// Confidence in [0, 1]; predictions only.
    pub score: Option<f64>,
    /// Track identity; tracking results (and tracking ground truth) only.
    pub track_id: Option<u64>,
}

impl ObjectRecord {
    pub fn gt(cls: ObjectClass, bbox: Box3D, track_id: Option<u64>) -> Self {
        ObjectRecord {
            cls,
            bbox,
            score: None,
            track_id,
        }
    }

    pub fn pred(cls: ObjectClass, bbox: Box3D, score: f64, track_id: Option<u64>) -> Self {
        ObjectRecord {
            cls,
            bbox,
            score: Some(score),
            track_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame_index: u64,
    pub timestamp_us: i64,
    pub objects: Vec<ObjectRecord>,
}

impl FrameRecord {
    pub fn new(frame_index: u64, timestamp_us: i64, objects: Vec<ObjectRecord>) -> Self {
        FrameRecord {
            frame_index,
            timestamp_us,
            objects,
        }
    }

    pub fn empty_like(other: &FrameRecord) -> Self {
        FrameRecord::new(other.frame_index, other.timestamp_us, Vec::new())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub sequence_id: String,
    pub gt_frames: Vec<FrameRecord>,
    pub pred_frames: Vec<FrameRecord>,
}

impl SequenceRecord {
    /// Pair ground truth with predictions, inserting empty prediction frames
    /// for ground-truth frames that have no prediction line. Prediction
    /// frames unknown to the ground truth are rejected.
    pub fn aligned(
        sequence_id: impl Into<String>,
        gt_frames: Vec<FrameRecord>,
        pred_frames: Vec<FrameRecord>,
    ) -> Result<Self> {
        let sequence_id = sequence_id.into();
        let gt_index: HashSet<u64> = gt_frames.iter().map(|f| f.frame_index).collect();
        if let Some(stray) = pred_frames.iter().find(|f| !gt_index.contains(&f.frame_index)) {
            return Err(Error::invalid(format!(
                "sequence {sequence_id}: prediction frame {} has no ground truth",
                stray.frame_index
            )));
        }
        let mut by_index: std::collections::HashMap<u64, FrameRecord> =
            pred_frames.into_iter().map(|f| (f.frame_index, f)).collect();
        let pred_frames = gt_frames
            .iter()
            .map(|g| {
                by_index
                    .remove(&g.frame_index)
                    .unwrap_or_else(|| FrameRecord::empty_like(g))
            })
            .collect();
        Ok(SequenceRecord {
            sequence_id,
            gt_frames,
            pred_frames,
        })
    }

    /// Iterate over (ground truth, prediction) frame pairs.
    pub fn pairs(&self) -> impl Iterator<Item = (&FrameRecord, &FrameRecord)> {
        self.gt_frames.iter().zip(&self.pred_frames)
    }
}

/// One broken invariant found by [`validate_sequence`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub frame_index: Option<u64>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.frame_index {
            Some(i) => write!(f, "frame {i}: {}: {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

/// What a frame list is expected to contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameRole {
    /// Annotations: no score.
    GroundTruth,
    /// Detector output: score required.
    Detections,
    /// Tracker output: track ids required, score optional.
    Tracks,
}

/// Check the invariants of a list of frames playing `role`.
pub fn validate_frames(frames: &[FrameRecord], role: FrameRole, side: &str) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |frame: Option<u64>, field: &str, message: String| {
        out.push(Violation {
            frame_index: frame,
            field: format!("{side}.{field}"),
            message,
        })
    };
    let mut prev: Option<u64> = None;
    for f in frames {
        let fi = Some(f.frame_index);
        if let Some(p) = prev {
            if f.frame_index <= p {
                push(fi, "frame_index", format!("not strictly increasing after {p}"));
            }
        }
        prev = Some(f.frame_index);

        let mut seen = HashSet::new();
        for (k, o) in f.objects.iter().enumerate() {
            if let Some(p) = o.bbox.problem() {
                push(fi, &format!("objects[{k}].box"), p);
            }
            if let Some(id) = o.track_id {
                if !seen.insert(id) {
                    push(fi, &format!("objects[{k}].track_id"), format!("duplicate track id {id}"));
                }
            } else if role == FrameRole::Tracks {
                push(fi, &format!("objects[{k}].track_id"), "missing track id".into());
            }
            match (role, o.score) {
                (FrameRole::GroundTruth, Some(_)) => {
                    push(fi, &format!("objects[{k}].score"), "ground truth carries a score".into())
                }
                (FrameRole::Detections, None) => {
                    push(fi, &format!("objects[{k}].score"), "prediction missing score".into())
                }
                (_, Some(s)) if !(0.0..=1.0).contains(&s) => {
                    push(fi, &format!("objects[{k}].score"), format!("score {s} outside [0, 1]"))
                }
                _ => {}
            }
        }
    }
    out
}

/// Check every record invariant of a sequence; an empty list means valid.
pub fn validate_sequence(seq: &SequenceRecord) -> Vec<Violation> {
    let mut out = validate_frames(&seq.gt_frames, FrameRole::GroundTruth, "gt");
    out.extend(validate_frames(&seq.pred_frames, FrameRole::Detections, "pred"));
    let gt: Vec<u64> = seq.gt_frames.iter().map(|f| f.frame_index).collect();
    let pred: Vec<u64> = seq.pred_frames.iter().map(|f| f.frame_index).collect();
    if gt != pred {
        let g: HashSet<_> = gt.iter().collect();
        let p: HashSet<_> = pred.iter().collect();
        let first = g.symmetric_difference(&p).copied().min().copied();
        out.push(Violation {
            frame_index: first,
            field: "frame_index".into(),
            message: "ground truth and prediction frame sets differ".into(),
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorKind {
    Camera,
    Lidar,
}

impl SensorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SensorKind::Camera => "camera",
            SensorKind::Lidar => "lidar",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraParams {
    pub width_px: u32,
    pub height_px: u32,
    pub hfov_rad: f64,
    pub vfov_rad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarParams {
    pub vertical_layers: u32,
    pub hfov_rad: f64,
    pub vfov_rad: f64,
    pub hor_ang_res_rad: f64,
    pub vert_ang_res_rad: f64,
    pub range_accuracy_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SensorParams {
    Camera(CameraParams),
    Lidar(LidarParams),
}

/// Registration error of the sensor frame into the global frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Registration {
    pub e_trans_m: f64,
    pub e_rot_rad: f64,
}

/// Physical description of one camera or lidar quality level.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorSpec {
    pub label: String,
    pub sample_rate_hz: f64,
    pub params: SensorParams,
    pub registration: Registration,
    /// Lumped exposure + readout + network + I/O time.
    pub readout_ms: f64,
}

impl SensorSpec {
    pub fn new(
        label: impl Into<String>,
        sample_rate_hz: f64,
        params: SensorParams,
        registration: Registration,
        readout_ms: f64,
    ) -> Result<Self> {
        let spec = SensorSpec {
            label: label.into(),
            sample_rate_hz,
            params,
            registration,
            readout_ms,
        };
        spec.check()?;
        Ok(spec)
    }

    pub fn kind(&self) -> SensorKind {
        match self.params {
            SensorParams::Camera(_) => SensorKind::Camera,
            SensorParams::Lidar(_) => SensorKind::Lidar,
        }
    }

    pub fn camera(&self) -> Result<&CameraParams> {
        match &self.params {
            SensorParams::Camera(c) => Ok(c),
            SensorParams::Lidar(_) => Err(Error::WrongSensorKind {
                expected: "camera",
                got: "lidar",
            }),
        }
    }

    pub fn lidar(&self) -> Result<&LidarParams> {
        match &self.params {
            SensorParams::Lidar(l) => Ok(l),
            SensorParams::Camera(_) => Err(Error::WrongSensorKind {
                expected: "lidar",
                got: "camera",
            }),
        }
    }

    fn check(&self) -> Result<()> {
        let label = &self.label;
        if label.is_empty() {
            return Err(Error::invalid("sensor label is empty"));
        }
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("sensor {label}: {name} must be > 0, got {v}")))
            }
        };
        let fov = |name: &str, v: f64| {
            if v > 0.0 && v < TAU {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "sensor {label}: {name} must lie in (0, 360) degrees, got {}",
                    v.to_degrees()
                )))
            }
        };
        positive("sample_rate_hz", self.sample_rate_hz)?;
        match &self.params {
            SensorParams::Camera(c) => {
                positive("width_px", c.width_px as f64)?;
                positive("height_px", c.height_px as f64)?;
                fov("hfov", c.hfov_rad)?;
                fov("vfov", c.vfov_rad)?;
            }
            SensorParams::Lidar(l) => {
                positive("vertical_layers", l.vertical_layers as f64)?;
                fov("hfov", l.hfov_rad)?;
                fov("vfov", l.vfov_rad)?;
                positive("hor_ang_res", l.hor_ang_res_rad)?;
                positive("vert_ang_res", l.vert_ang_res_rad)?;
                positive("range_accuracy_m", l.range_accuracy_m)?;
            }
        }
        for (name, v) in [
            ("e_trans_m", self.registration.e_trans_m),
            ("e_rot", self.registration.e_rot_rad),
            ("readout_ms", self.readout_ms),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("sensor {label}: {name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Computing hardware description; metadata only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineProfile {
    pub machine_id: u32,
    #[serde(default)]
    pub gpu_desc: String,
    #[serde(default)]
    pub cpu_desc: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub frame_index: u64,
    pub t_detection_ms: f64,
    pub t_tracking_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetupKind {
    CameraOnly,
    LidarOnly,
    Combined,
}

/// One sensor setup on one machine: a "total combination".
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SetupId {
    pub kind: SetupKind,
    pub camera_label: Option<String>,
    pub lidar_label: Option<String>,
    pub machine_id: u32,
}

impl SetupId {
    pub fn camera(label: impl Into<String>, machine_id: u32) -> Self {
        SetupId {
            kind: SetupKind::CameraOnly,
            camera_label: Some(label.into()),
            lidar_label: None,
            machine_id,
        }
    }

    pub fn lidar(label: impl Into<String>, machine_id: u32) -> Self {
        SetupId {
            kind: SetupKind::LidarOnly,
            camera_label: None,
            lidar_label: Some(label.into()),
            machine_id,
        }
    }

    pub fn combined(camera: impl Into<String>, lidar: impl Into<String>, machine_id: u32) -> Self {
        SetupId {
            kind: SetupKind::Combined,
            camera_label: Some(camera.into()),
            lidar_label: Some(lidar.into()),
            machine_id,
        }
    }

    /// Build from optional labels, inferring the kind.
    pub fn from_labels(
        camera: Option<String>,
        lidar: Option<String>,
        machine_id: u32,
    ) -> Result<Self> {
        match (camera, lidar) {
            (Some(c), None) => Ok(SetupId::camera(c, machine_id)),
            (None, Some(l)) => Ok(SetupId::lidar(l, machine_id)),
            (Some(c), Some(l)) => Ok(SetupId::combined(c, l, machine_id)),
            (None, None) => Err(Error::invalid("setup needs a camera or a lidar label")),
        }
    }

    /// Sensor part of the name, e.g. `C540 & L32`.
    pub fn sensor_label(&self) -> String {
        match (&self.camera_label, &self.lidar_label) {
            (Some(c), Some(l)) => format!("{c} & {l}"),
            (Some(c), None) => c.clone(),
            (None, Some(l)) => l.clone(),
            (None, None) => String::new(),
        }
    }
}

impl fmt::Display for SetupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, machine {}", self.sensor_label(), self.machine_id)
    }
}

/// Normalized (accuracy, latency, reliability) triple and its magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityVector {
    pub accuracy_norm: f64,
    pub latency_norm: f64,
    pub reliability_norm: f64,
    pub magnitude: f64,
}
