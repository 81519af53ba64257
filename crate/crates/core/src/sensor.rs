//! Accuracy model: sensor error, registration (localization) error, their
//! combination with detection and tracking scores, and composition of two
//! single-sensor setups into a combined one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Registration, SensorParams, SensorSpec};

/// Constants shared by every evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConstants {
    /// Sensor-independent maximum detection distance.
    pub x_detection_m: f64,
    pub t_min_ms: f64,
    pub t_max_ms: f64,
    /// Registration error used for cameras that do not specify their own.
    pub camera_registration: Registration,
    pub lidar_registration: Registration,
}

impl Default for EvalConstants {
    fn default() -> Self {
        EvalConstants {
            x_detection_m: 150.0,
            t_min_ms: 0.0,
            t_max_ms: 1000.0,
            camera_registration: Registration {
                e_trans_m: 0.00519,
                e_rot_rad: 0.09f64.to_radians(),
            },
            lidar_registration: Registration {
                e_trans_m: 0.04,
                e_rot_rad: 0.03f64.to_radians(),
            },
        }
    }
}

impl EvalConstants {
    pub fn validate(&self) -> Result<()> {
        if !(self.x_detection_m.is_finite() && self.x_detection_m > 0.0) {
            return Err(Error::invalid("x_detection_m must be > 0"));
        }
        if !(self.t_max_ms > self.t_min_ms) {
            return Err(Error::invalid("t_max_ms must exceed t_min_ms"));
        }
        Ok(())
    }
}

/// How a camera's sensor error is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum CameraErrorModel {
    /// Larger of the horizontal and vertical ground sampling distance.
    #[default]
    MaxGsd,
    /// Calibrated constant error in meters.
    Fixed { e_s_m: f64 },
}

/// How a lidar's sensor error is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum LidarErrorModel {
    /// Beam footprint from angular resolution plus range accuracy.
    #[default]
    BeamFootprint,
    Fixed { e_s_m: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorModels {
    #[serde(default)]
    pub camera: CameraErrorModel,
    #[serde(default)]
    pub lidar: LidarErrorModel,
}

/// Ground sampling distance of a camera at `distance_m`: the larger of the
/// per-pixel ground extents along image width and height.
pub fn camera_gsd(spec: &SensorSpec, distance_m: f64) -> Result<f64> {
    let c = spec.camera()?;
    let gsd_w = 2.0 * distance_m * (c.hfov_rad / 2.0).tan() / c.width_px as f64;
    let gsd_h = 2.0 * distance_m * (c.vfov_rad / 2.0).tan() / c.height_px as f64;
    Ok(gsd_w.max(gsd_h))
}

/// Lidar position error at `distance_m`:
/// `sqrt((d·θh)² + (d·θv)² + σr²)`.
pub fn lidar_range_error(spec: &SensorSpec, distance_m: f64) -> Result<f64> {
    let l = spec.lidar()?;
    let h = distance_m * l.hor_ang_res_rad;
    let v = distance_m * l.vert_ang_res_rad;
    Ok((h * h + v * v + l.range_accuracy_m * l.range_accuracy_m).sqrt())
}

/// Sensor error at the maximum detection distance under the selected model.
pub fn sensor_error(spec: &SensorSpec, models: &ErrorModels, consts: &EvalConstants) -> Result<f64> {
    let d = consts.x_detection_m;
    match spec.params {
        SensorParams::Camera(_) => match models.camera {
            CameraErrorModel::MaxGsd => camera_gsd(spec, d),
            CameraErrorModel::Fixed { e_s_m } => Ok(e_s_m),
        },
        SensorParams::Lidar(_) => match models.lidar {
            LidarErrorModel::BeamFootprint => lidar_range_error(spec, d),
            LidarErrorModel::Fixed { e_s_m } => Ok(e_s_m),
        },
    }
}

fn distance_accuracy(error_m: f64, consts: &EvalConstants) -> f64 {
    (1.0 - error_m / consts.x_detection_m).clamp(0.0, 1.0)
}

/// `1 − e_s / x_detection`, floored at 0.
pub fn sensor_accuracy(e_s_m: f64, consts: &EvalConstants) -> f64 {
    distance_accuracy(e_s_m, consts)
}

/// Registration error: translation combined with the arc length the
/// rotational error sweeps at the maximum detection distance.
pub fn localization_error(reg: &Registration, consts: &EvalConstants) -> f64 {
    reg.e_trans_m.hypot(consts.x_detection_m * reg.e_rot_rad)
}

/// `1 − e_l / x_detection`, floored at 0.
pub fn localization_accuracy(reg: &Registration, consts: &EvalConstants) -> f64 {
    distance_accuracy(localization_error(reg, consts), consts)
}

pub fn composite_accuracy(a_s: f64, a_l: f64, a_d: f64) -> f64 {
    a_s * a_l * a_d
}

/// Self-weighted mean `(a_i² + a_j²) / (a_i + a_j)`; 0 when both are 0.
pub fn combine_composite(a_i: f64, a_j: f64) -> f64 {
    let sum = a_i + a_j;
    if sum <= 0.0 {
        0.0
    } else {
        (a_i * a_i + a_j * a_j) / sum
    }
}

pub fn combine_tracking(t_i: f64, t_j: f64) -> f64 {
    (t_i + t_j) / 2.0
}

/// Fourth root of `a_sld · a_t`.
pub fn accuracy_norm(a_sld: f64, a_t: f64) -> f64 {
    (a_sld * a_t).max(0.0).powf(0.25)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyBreakdown {
    pub a_s: f64,
    pub a_l: f64,
    pub a_d: f64,
    pub a_sld: f64,
    pub a_t: f64,
    pub accuracy_norm: f64,
}

impl AccuracyBreakdown {
    pub fn new(a_s: f64, a_l: f64, a_d: f64, a_t: f64) -> Self {
        let a_sld = composite_accuracy(a_s, a_l, a_d);
        AccuracyBreakdown {
            a_s,
            a_l,
            a_d,
            a_sld,
            a_t,
            accuracy_norm: accuracy_norm(a_sld, a_t),
        }
    }

    /// Single-sensor accuracy from a spec plus measured mAP and HOTA.
    pub fn for_sensor(
        spec: &SensorSpec,
        models: &ErrorModels,
        consts: &EvalConstants,
        map: f64,
        hota: f64,
    ) -> Result<Self> {
        let e_s = sensor_error(spec, models, consts)?;
        Ok(AccuracyBreakdown::new(
            sensor_accuracy(e_s, consts),
            localization_accuracy(&spec.registration, consts),
            map,
            hota,
        ))
    }

    /// Combined setup with a measured fused pipeline: sensor and
    /// localization terms are composed from the two sensors, detection and
    /// tracking come from the fused results.
    pub fn fused(camera: &Self, lidar: &Self, map: f64, hota: f64) -> Self {
        AccuracyBreakdown::new(
            combine_composite(camera.a_s, lidar.a_s),
            combine_composite(camera.a_l, lidar.a_l),
            map,
            hota,
        )
    }

    /// Combined setup composed purely from the two single-sensor results.
    /// `a_d` is the effective detection term that keeps
    /// `a_sld = a_s · a_l · a_d`.
    pub fn composed(camera: &Self, lidar: &Self) -> Self {
        let a_s = combine_composite(camera.a_s, lidar.a_s);
        let a_l = combine_composite(camera.a_l, lidar.a_l);
        let a_sld = combine_composite(camera.a_sld, lidar.a_sld);
        let a_t = combine_tracking(camera.a_t, lidar.a_t);
        let sl = a_s * a_l;
        let a_d = if sl > 0.0 { (a_sld / sl).min(1.0) } else { 0.0 };
        AccuracyBreakdown {
            a_s,
            a_l,
            a_d,
            a_sld,
            a_t,
            accuracy_norm: accuracy_norm(a_sld, a_t),
        }
    }
}
