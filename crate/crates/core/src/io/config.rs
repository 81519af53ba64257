//! Run configuration (TOML) and input loading.
//!
//! Angles are given in degrees and converted on load. Input paths are
//! resolved against the configuration file's directory and may contain the
//! placeholders `{camera}`, `{lidar}` and `{machine}`. A binding without a
//! `machine` applies to every machine that has no binding of its own.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{
    validate_frames, CameraParams, FrameRecord, FrameRole, LidarParams, MachineProfile, Registration,
    SensorKind, SensorParams, SensorSpec, SetupId,
};
use crate::pipeline::{evaluate_loaded, EvaluationPlan, FusionPolicy, QualityWeights, SetupInputs, SetupResult};
use crate::sensor::{ErrorModels, EvalConstants};
use crate::tracking::HotaOptions;

use super::dair::load_labels_dair;
use super::frames::load_frames_jsonl;
use super::read_to_string;
use super::timing::load_timing_csv;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantsToml {
    #[serde(default = "d_x_det")]
    x_detection_m: f64,
    #[serde(default)]
    t_min_ms: f64,
    #[serde(default = "d_t_max")]
    t_max_ms: f64,
    #[serde(default = "d_cam_trans")]
    camera_e_trans_m: f64,
    #[serde(default = "d_cam_rot")]
    camera_e_rot_deg: f64,
    #[serde(default = "d_lid_trans")]
    lidar_e_trans_m: f64,
    #[serde(default = "d_lid_rot")]
    lidar_e_rot_deg: f64,
}

fn d_x_det() -> f64 {
    150.0
}
fn d_t_max() -> f64 {
    1000.0
}
fn d_cam_trans() -> f64 {
    0.00519
}
fn d_cam_rot() -> f64 {
    0.09
}
fn d_lid_trans() -> f64 {
    0.04
}
fn d_lid_rot() -> f64 {
    0.03
}

impl Default for ConstantsToml {
    fn default() -> Self {
        ConstantsToml {
            x_detection_m: d_x_det(),
            t_min_ms: 0.0,
            t_max_ms: d_t_max(),
            camera_e_trans_m: d_cam_trans(),
            camera_e_rot_deg: d_cam_rot(),
            lidar_e_trans_m: d_lid_trans(),
            lidar_e_rot_deg: d_lid_rot(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct SensorToml {
    kind: SensorKind,
    label: String,
    #[serde(default = "d_rate")]
    sample_rate_hz: f64,
    hfov_deg: f64,
    vfov_deg: f64,
    width_px: Option<u32>,
    height_px: Option<u32>,
    vertical_layers: Option<u32>,
    hor_ang_res_deg: Option<f64>,
    vert_ang_res_deg: Option<f64>,
    range_accuracy_m: Option<f64>,
    e_trans_m: Option<f64>,
    e_rot_deg: Option<f64>,
    #[serde(default)]
    readout_ms: f64,
}

fn d_rate() -> f64 {
    10.0
}

/// Ground truth as JSONL or as a DAIR-style label directory.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum GtSource {
    Jsonl(PathBuf),
    Dair { dair_labels: PathBuf, dair_calib: PathBuf },
}

/// Result files of one setup (or, without `machine`, of a setup on every
/// machine).
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputBinding {
    pub camera: Option<String>,
    pub lidar: Option<String>,
    pub machine: Option<u32>,
    pub gt: Option<GtSource>,
    pub detections: Option<PathBuf>,
    pub tracks: Option<PathBuf>,
    pub timing: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunToml {
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    fusion: FusionPolicy,
    #[serde(default)]
    weights: QualityWeights,
    #[serde(default)]
    hota: HotaOptions,
    #[serde(default)]
    constants: ConstantsToml,
    #[serde(default)]
    error_models: ErrorModels,
    #[serde(default)]
    sensors: Vec<SensorToml>,
    #[serde(default)]
    machines: Vec<MachineProfile>,
    #[serde(default)]
    inputs: Vec<InputBinding>,
}

/// Parsed and validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub plan: EvaluationPlan,
    pub inputs: Vec<InputBinding>,
    pub output_dir: PathBuf,
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
}

fn sensor_from_toml(s: SensorToml, consts: &EvalConstants) -> Result<SensorSpec> {
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| Error::invalid(format!("sensor {}: missing {name}", s.label)))
    };
    let (params, default_reg) = match s.kind {
        SensorKind::Camera => {
            let (Some(w), Some(h)) = (s.width_px, s.height_px) else {
                return Err(Error::invalid(format!("sensor {}: cameras need width_px and height_px", s.label)));
            };
            (
                SensorParams::Camera(CameraParams {
                    width_px: w,
                    height_px: h,
                    hfov_rad: s.hfov_deg.to_radians(),
                    vfov_rad: s.vfov_deg.to_radians(),
                }),
                consts.camera_registration,
            )
        }
        SensorKind::Lidar => {
            let layers = s
                .vertical_layers
                .ok_or_else(|| Error::invalid(format!("sensor {}: missing vertical_layers", s.label)))?;
            (
                SensorParams::Lidar(LidarParams {
                    vertical_layers: layers,
                    hfov_rad: s.hfov_deg.to_radians(),
                    vfov_rad: s.vfov_deg.to_radians(),
                    hor_ang_res_rad: need(s.hor_ang_res_deg, "hor_ang_res_deg")?.to_radians(),
                    vert_ang_res_rad: need(s.vert_ang_res_deg, "vert_ang_res_deg")?.to_radians(),
                    range_accuracy_m: need(s.range_accuracy_m, "range_accuracy_m")?,
                }),
                consts.lidar_registration,
            )
        }
    };
    let registration = Registration {
        e_trans_m: s.e_trans_m.unwrap_or(default_reg.e_trans_m),
        e_rot_rad: s.e_rot_deg.map(f64::to_radians).unwrap_or(default_reg.e_rot_rad),
    };
    SensorSpec::new(s.label.clone(), s.sample_rate_hz, params, registration, s.readout_ms)
}

/// Parse configuration text; `base_dir` anchors relative paths.
pub fn parse_run_config(text: &str, base_dir: &Path) -> Result<RunConfig> {
    let raw: RunToml = toml::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))?;
    let c = &raw.constants;
    let constants = EvalConstants {
        x_detection_m: c.x_detection_m,
        t_min_ms: c.t_min_ms,
        t_max_ms: c.t_max_ms,
        camera_registration: Registration {
            e_trans_m: c.camera_e_trans_m,
            e_rot_rad: c.camera_e_rot_deg.to_radians(),
        },
        lidar_registration: Registration {
            e_trans_m: c.lidar_e_trans_m,
            e_rot_rad: c.lidar_e_rot_deg.to_radians(),
        },
    };
    constants.validate()?;

    let mut seen = BTreeSet::new();
    for s in &raw.sensors {
        if !seen.insert(s.label.clone()) {
            return Err(Error::invalid(format!("duplicate sensor label {}", s.label)));
        }
    }
    let mut ids = BTreeSet::new();
    for m in &raw.machines {
        if !ids.insert(m.machine_id) {
            return Err(Error::invalid(format!("duplicate machine id {}", m.machine_id)));
        }
    }
    let sensors = raw
        .sensors
        .into_iter()
        .map(|s| sensor_from_toml(s, &constants))
        .collect::<Result<Vec<_>>>()?;
    for w in [raw.weights.accuracy, raw.weights.latency, raw.weights.reliability] {
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::invalid("quality weights must be finite and >= 0"));
        }
    }

    let plan = EvaluationPlan {
        sensors,
        machines: raw.machines,
        constants,
        error_models: raw.error_models,
        fusion: raw.fusion,
        weights: raw.weights,
        hota: raw.hota,
    };
    for b in &raw.inputs {
        check_binding(&plan, b)?;
    }
    let mut keys = BTreeSet::new();
    for b in &raw.inputs {
        if !keys.insert((b.camera.clone(), b.lidar.clone(), b.machine)) {
            return Err(Error::invalid(format!(
                "duplicate input binding for {} (machine {:?})",
                binding_label(b),
                b.machine
            )));
        }
    }
    Ok(RunConfig {
        plan,
        inputs: raw.inputs,
        output_dir: base_dir.join(raw.output_dir.unwrap_or_else(|| PathBuf::from("report"))),
        base_dir: base_dir.to_path_buf(),
    })
}

fn binding_label(b: &InputBinding) -> String {
    match (&b.camera, &b.lidar) {
        (Some(c), Some(l)) => format!("{c} & {l}"),
        (Some(c), None) => c.clone(),
        (None, Some(l)) => l.clone(),
        (None, None) => "<none>".into(),
    }
}

fn check_binding(plan: &EvaluationPlan, b: &InputBinding) -> Result<()> {
    if b.camera.is_none() && b.lidar.is_none() {
        return Err(Error::invalid("input binding needs a camera or a lidar label"));
    }
    for (label, kind) in [(&b.camera, SensorKind::Camera), (&b.lidar, SensorKind::Lidar)] {
        if let Some(l) = label {
            let s = plan.sensor(l)?;
            if s.kind() != kind {
                return Err(Error::invalid(format!("input binding: {l} is not a {}", kind.as_str())));
            }
        }
    }
    if let Some(m) = b.machine {
        if !plan.machines.iter().any(|p| p.machine_id == m) {
            return Err(Error::invalid(format!("input binding: unknown machine {m}")));
        }
    }
    Ok(())
}

pub fn load_run_config(path: &Path) -> Result<RunConfig> {
    let text = read_to_string(path).map_err(|e| match e {
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
            Error::Missing(format!("config file {}", path.display()))
        }
        other => other,
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_run_config(&text, &base)
}

impl RunConfig {
    /// Binding for a setup: machine-specific first, then machine-agnostic.
    pub fn binding(&self, setup: &SetupId) -> Option<&InputBinding> {
        let same = |b: &&InputBinding| b.camera == setup.camera_label && b.lidar == setup.lidar_label;
        self.inputs
            .iter()
            .filter(same)
            .find(|b| b.machine == Some(setup.machine_id))
            .or_else(|| self.inputs.iter().filter(same).find(|b| b.machine.is_none()))
    }

    fn resolve(&self, setup: &SetupId, p: &Path) -> PathBuf {
        let s = p
            .to_string_lossy()
            .replace("{camera}", setup.camera_label.as_deref().unwrap_or(""))
            .replace("{lidar}", setup.lidar_label.as_deref().unwrap_or(""))
            .replace("{machine}", &setup.machine_id.to_string());
        self.base_dir.join(s)
    }

    /// Read every file bound to `setup`.
    pub fn load_setup(&self, setup: &SetupId) -> Result<SetupInputs> {
        let b = self.binding(setup).ok_or_else(|| Error::MissingSetupInput {
            setup: setup.to_string(),
            what: "no input binding".into(),
        })?;
        let file = |p: &Path| -> Result<PathBuf> {
            let path = self.resolve(setup, p);
            if path.exists() {
                Ok(path)
            } else {
                Err(Error::MissingSetupInput {
                    setup: setup.to_string(),
                    what: format!("file {}", path.display()),
                })
            }
        };
        let gt = match &b.gt {
            None => None,
            Some(GtSource::Jsonl(p)) => Some(load_frames_jsonl(&file(p)?)?),
            Some(GtSource::Dair { dair_labels, dair_calib }) => {
                Some(load_labels_dair(&file(dair_labels)?, &file(dair_calib)?)?)
            }
        };
        let detections = b.detections.as_deref().map(|p| load_frames_jsonl(&file(p)?)).transpose()?;
        let tracks = b.tracks.as_deref().map(|p| load_frames_jsonl(&file(p)?)).transpose()?;
        let timing = match &b.timing {
            Some(p) => load_timing_csv(&file(p)?)?,
            None => {
                return Err(Error::MissingSetupInput {
                    setup: setup.to_string(),
                    what: "timing".into(),
                })
            }
        };
        let check = |frames: &Option<Vec<FrameRecord>>, role: FrameRole, side: &str| -> Result<()> {
            let Some(f) = frames else { return Ok(()) };
            let v = validate_frames(f, role, side);
            if v.is_empty() {
                return Ok(());
            }
            let listed: Vec<String> = v.iter().take(5).map(|x| x.to_string()).collect();
            Err(Error::invalid(format!(
                "setup {setup}: {} invalid record(s): {}",
                v.len(),
                listed.join("; ")
            )))
        };
        check(&gt, FrameRole::GroundTruth, "gt")?;
        check(&detections, FrameRole::Detections, "detections")?;
        check(&tracks, FrameRole::Tracks, "tracks")?;
        Ok(SetupInputs {
            gt,
            detections,
            tracks,
            timing,
        })
    }

    /// Load all inputs and evaluate every enumerated setup.
    pub fn evaluate(&self, exec: Exec) -> Result<Vec<SetupResult>> {
        let setups = self.plan.setups();
        let loaded = exec.try_map(&setups, |s| self.load_setup(s).map(|i| (s.clone(), i)))?;
        let inputs: HashMap<SetupId, SetupInputs> = loaded.into_iter().collect();
        evaluate_loaded(&self.plan, &inputs, exec)
    }
}
