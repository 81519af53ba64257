//! Setup enumeration, latency and reliability KPIs, quality vectors, and the
//! two-phase evaluation of every setup on every machine.
//!
//! Phase 1 evaluates setups independently (single-sensor setups first, since
//! combined setups may be composed from them). Phase 2 normalizes raw
//! reliability over the whole batch. Results come back in enumeration order
//! whatever the worker count.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::detection::map_at_05;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{
    FrameRecord, MachineProfile, QualityVector, SensorKind, SensorSpec, SequenceRecord, SetupId,
    SetupKind, TimingRecord,
};
use crate::sensor::{combine_composite, AccuracyBreakdown, ErrorModels, EvalConstants};
use crate::tracking::{hota_3d, HotaOptions};

/// All setups crossed with all machines: cameras, then lidars, then
/// camera-major combinations, each over machines in ascending id order.
/// Yields `(i + j + i·j) · machines` entries.
pub fn enumerate_setups(cameras: &[String], lidars: &[String], machines: &[MachineProfile]) -> Vec<SetupId> {
    let mut ids: Vec<u32> = machines.iter().map(|m| m.machine_id).collect();
    ids.sort_unstable();
    let mut out = Vec::with_capacity((cameras.len() + lidars.len() + cameras.len() * lidars.len()) * ids.len());
    for c in cameras {
        out.extend(ids.iter().map(|&m| SetupId::camera(c.clone(), m)));
    }
    for l in lidars {
        out.extend(ids.iter().map(|&m| SetupId::lidar(l.clone(), m)));
    }
    for c in cameras {
        for l in lidars {
            out.extend(ids.iter().map(|&m| SetupId::combined(c.clone(), l.clone(), m)));
        }
    }
    out
}

/// How two sensors' readout + detection times combine in a combined setup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionPolicy {
    /// Sensors run concurrently: the slower branch counts.
    #[default]
    Parallel,
    /// Sensors run one after the other: branches add up.
    Serial,
}

/// Latency components of one frame, milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameLatency {
    pub frame_index: u64,
    pub readout_ms: f64,
    pub detection_ms: f64,
    pub tracking_ms: f64,
}

impl FrameLatency {
    pub fn total(&self) -> f64 {
        self.readout_ms + self.detection_ms + self.tracking_ms
    }
}

pub fn frame_latencies(timings: &[TimingRecord], readout_ms: f64) -> Vec<FrameLatency> {
    timings
        .iter()
        .map(|t| FrameLatency {
            frame_index: t.frame_index,
            readout_ms,
            detection_ms: t.t_detection_ms,
            tracking_ms: t.t_tracking_ms,
        })
        .collect()
}

/// Per-frame latency of a combined setup. Frames come from the fused
/// tracking log; both sensors must have a timing record for each of them.
pub fn combined_frame_latencies(
    camera: &[FrameLatency],
    lidar: &[FrameLatency],
    fused_tracking: &[TimingRecord],
    policy: FusionPolicy,
) -> Result<Vec<FrameLatency>> {
    let cam: HashMap<u64, &FrameLatency> = camera.iter().map(|f| (f.frame_index, f)).collect();
    let lid: HashMap<u64, &FrameLatency> = lidar.iter().map(|f| (f.frame_index, f)).collect();
    fused_tracking
        .iter()
        .map(|t| {
            let (c, l) = match (cam.get(&t.frame_index), lid.get(&t.frame_index)) {
                (Some(c), Some(l)) => (c, l),
                _ => {
                    return Err(Error::invalid(format!(
                        "frame {} lacks a camera or lidar timing record",
                        t.frame_index
                    )))
                }
            };
            let (readout_ms, detection_ms) = match policy {
                FusionPolicy::Parallel => {
                    if c.readout_ms + c.detection_ms >= l.readout_ms + l.detection_ms {
                        (c.readout_ms, c.detection_ms)
                    } else {
                        (l.readout_ms, l.detection_ms)
                    }
                }
                FusionPolicy::Serial => (c.readout_ms + l.readout_ms, c.detection_ms + l.detection_ms),
            };
            Ok(FrameLatency {
                frame_index: t.frame_index,
                readout_ms,
                detection_ms,
                tracking_ms: t.t_tracking_ms,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyBreakdown {
    pub t_sensor_readout_ms: f64,
    pub t_detection_ms: f64,
    pub t_tracking_ms: f64,
    pub total_ms: f64,
    pub latency_norm: f64,
}

/// `1 − (clamp(total, 0, t_max) − t_min) / (t_max − t_min)`, kept in [0, 1].
pub fn latency_norm(total_ms: f64, consts: &EvalConstants) -> f64 {
    let t = total_ms.clamp(0.0, consts.t_max_ms);
    (1.0 - (t - consts.t_min_ms) / (consts.t_max_ms - consts.t_min_ms)).clamp(0.0, 1.0)
}

fn mean(xs: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = xs.len() as f64;
    xs.sum::<f64>() / n
}

/// Means of the per-frame components and the normalized total.
pub fn summarize_latency(frames: &[FrameLatency], consts: &EvalConstants) -> Result<LatencyBreakdown> {
    if frames.is_empty() {
        return Err(Error::invalid("no timing records"));
    }
    let total_ms = mean(frames.iter().map(FrameLatency::total));
    Ok(LatencyBreakdown {
        t_sensor_readout_ms: mean(frames.iter().map(|f| f.readout_ms)),
        t_detection_ms: mean(frames.iter().map(|f| f.detection_ms)),
        t_tracking_ms: mean(frames.iter().map(|f| f.tracking_ms)),
        total_ms,
        latency_norm: latency_norm(total_ms, consts),
    })
}

/// Latency of a single-sensor setup from its timing log.
pub fn total_latency(timings: &[TimingRecord], readout_ms: f64, consts: &EvalConstants) -> Result<LatencyBreakdown> {
    summarize_latency(&frame_latencies(timings, readout_ms), consts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBreakdown {
    pub var_r1: f64,
    pub var_r2: f64,
    pub var_r3: f64,
    pub var_r4: f64,
    pub cov_r1_r2: f64,
    pub cov_r1_r3: f64,
    pub raw: f64,
    /// Filled in once the whole batch is known.
    pub reliability_norm: f64,
}

fn covariance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n
}

/// Raw reliability from the four per-frame series (objects per frame,
/// detection ratio, tracking ms, detection ms): the variances of all four
/// plus twice the covariances of objects with detection ratio and with
/// tracking time. Population moments.
pub fn reliability_raw(r1: &[f64], r2: &[f64], r3: &[f64], r4: &[f64]) -> Result<ReliabilityBreakdown> {
    let n = r1.len();
    if [r2.len(), r3.len(), r4.len()].iter().any(|&l| l != n) {
        return Err(Error::invalid("reliability series differ in length"));
    }
    if n < 2 {
        return Err(Error::invalid("reliability needs at least two frames"));
    }
    let var_r1 = covariance(r1, r1);
    let var_r2 = covariance(r2, r2);
    let var_r3 = covariance(r3, r3);
    let var_r4 = covariance(r4, r4);
    let cov_r1_r2 = covariance(r1, r2);
    let cov_r1_r3 = covariance(r1, r3);
    Ok(ReliabilityBreakdown {
        var_r1,
        var_r2,
        var_r3,
        var_r4,
        cov_r1_r2,
        cov_r1_r3,
        raw: var_r1 + var_r2 + var_r3 + var_r4 + 2.0 * cov_r1_r2 + 2.0 * cov_r1_r3,
        reliability_norm: f64::NAN,
    })
}

/// Min-max normalize raw reliabilities over a batch: the smallest maps to 1,
/// the largest to 0. A batch without spread maps entirely to 1.
pub fn reliability_norm_batch(raws: &[f64]) -> Vec<f64> {
    let lo = raws.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raws.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    raws.iter()
        .map(|&r| if span > 0.0 { 1.0 - (r - lo) / span } else { 1.0 })
        .collect()
}

/// Component weights for the magnitude of the quality vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityWeights {
    pub accuracy: f64,
    pub latency: f64,
    pub reliability: f64,
}

impl Default for QualityWeights {
    fn default() -> Self {
        QualityWeights {
            accuracy: 1.0,
            latency: 1.0,
            reliability: 1.0,
        }
    }
}

/// Quality vector with `magnitude = sqrt(Σ wₖ·cₖ²)`, the Euclidean norm for
/// unit weights.
pub fn build_quality_vector(a_norm: f64, l_norm: f64, r_norm: f64, w: &QualityWeights) -> QualityVector {
    QualityVector {
        accuracy_norm: a_norm,
        latency_norm: l_norm,
        reliability_norm: r_norm,
        magnitude: (w.accuracy * a_norm * a_norm + w.latency * l_norm * l_norm + w.reliability * r_norm * r_norm)
            .sqrt(),
    }
}

/// Where a setup's detection and tracking accuracy came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccuracySource {
    /// Computed from the setup's own result files.
    Measured,
    /// Combined setup composed from its two single-sensor setups.
    Composed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetupResult {
    pub setup: SetupId,
    pub source: AccuracySource,
    pub accuracy: AccuracyBreakdown,
    pub latency: LatencyBreakdown,
    pub reliability: ReliabilityBreakdown,
    pub q: QualityVector,
    /// Per-class AP; empty for composed setups.
    #[serde(default)]
    pub per_class_ap: BTreeMap<String, f64>,
    pub det_a: Option<f64>,
    pub ass_a: Option<f64>,
    pub frames: usize,
}

/// Everything the evaluation needs besides the input data.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationPlan {
    pub sensors: Vec<SensorSpec>,
    pub machines: Vec<MachineProfile>,
    pub constants: EvalConstants,
    pub error_models: ErrorModels,
    pub fusion: FusionPolicy,
    pub weights: QualityWeights,
    pub hota: HotaOptions,
}

impl EvaluationPlan {
    pub fn labels(&self, kind: SensorKind) -> Vec<String> {
        self.sensors.iter().filter(|s| s.kind() == kind).map(|s| s.label.clone()).collect()
    }

    pub fn setups(&self) -> Vec<SetupId> {
        enumerate_setups(&self.labels(SensorKind::Camera), &self.labels(SensorKind::Lidar), &self.machines)
    }

    pub fn sensor(&self, label: &str) -> Result<&SensorSpec> {
        self.sensors
            .iter()
            .find(|s| s.label == label)
            .ok_or_else(|| Error::invalid(format!("unknown sensor label {label}")))
    }
}

/// Loaded inputs of one setup. Combined setups may omit ground truth,
/// detections and tracks; they are then composed from their single-sensor
/// setups and `timing` only supplies fused tracking times.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SetupInputs {
    pub gt: Option<Vec<FrameRecord>>,
    pub detections: Option<Vec<FrameRecord>>,
    pub tracks: Option<Vec<FrameRecord>>,
    pub timing: Vec<TimingRecord>,
}

// Per-frame series kept from phase 1.
#[derive(Debug, Clone)]
struct FrameStats {
    frame_index: u64,
    n_objects: f64,
    ad: f64,
    latency: FrameLatency,
}

#[derive(Debug, Clone)]
struct Phase1 {
    result: SetupResult,
    frames: Vec<FrameStats>,
}

fn missing(setup: &SetupId, what: &str) -> Error {
    Error::MissingSetupInput {
        setup: setup.to_string(),
        what: what.into(),
    }
}

fn join_timing(setup: &SetupId, gt: &[FrameRecord], lat: &[FrameLatency]) -> Result<Vec<FrameLatency>> {
    let by_frame: HashMap<u64, &FrameLatency> = lat.iter().map(|l| (l.frame_index, l)).collect();
    gt.iter()
        .map(|f| {
            by_frame
                .get(&f.frame_index)
                .map(|l| **l)
                .ok_or_else(|| missing(setup, &format!("timing record for frame {}", f.frame_index)))
        })
        .collect()
}

struct Measured {
    map: f64,
    per_class_ap: BTreeMap<String, f64>,
    hota: f64,
    det_a: f64,
    ass_a: f64,
    gt: Vec<FrameRecord>,
    ad: Vec<f64>,
}

fn measure(plan: &EvaluationPlan, setup: &SetupId, inputs: &SetupInputs) -> Result<Measured> {
    let gt = inputs.gt.clone().ok_or_else(|| missing(setup, "ground truth"))?;
    let dets = inputs.detections.clone().ok_or_else(|| missing(setup, "detections"))?;
    let tracks = inputs.tracks.clone().ok_or_else(|| missing(setup, "tracks"))?;
    let det_seq = SequenceRecord::aligned(setup.to_string(), gt.clone(), dets)?;
    let trk_seq = SequenceRecord::aligned(setup.to_string(), gt, tracks)?;
    // setups are already spread over workers; keep inner loops sequential
    let ap = map_at_05(&det_seq.gt_frames, &det_seq.pred_frames, Exec::Sequential)?;
    let hota = hota_3d(&trk_seq.gt_frames, &trk_seq.pred_frames, plan.hota, Exec::Sequential)?;
    Ok(Measured {
        map: ap.map_value,
        per_class_ap: ap.per_class_ap.iter().map(|(c, v)| (c.to_string(), *v)).collect(),
        hota: hota.hota,
        det_a: hota.det_a,
        ass_a: hota.ass_a,
        ad: ap.per_frame_ad.iter().map(|&(_, v)| v).collect(),
        gt: det_seq.gt_frames,
    })
}

fn finish(
    plan: &EvaluationPlan,
    setup: &SetupId,
    source: AccuracySource,
    accuracy: AccuracyBreakdown,
    frames: Vec<FrameStats>,
    measured: Option<&Measured>,
) -> Result<Phase1> {
    let lat: Vec<FrameLatency> = frames.iter().map(|f| f.latency).collect();
    let latency = summarize_latency(&lat, &plan.constants)?;
    let r1: Vec<f64> = frames.iter().map(|f| f.n_objects).collect();
    let r2: Vec<f64> = frames.iter().map(|f| f.ad).collect();
    let r3: Vec<f64> = frames.iter().map(|f| f.latency.tracking_ms).collect();
    let r4: Vec<f64> = frames.iter().map(|f| f.latency.detection_ms).collect();
    let reliability = reliability_raw(&r1, &r2, &r3, &r4)
        .map_err(|e| Error::invalid(format!("setup {setup}: {e}")))?;
    Ok(Phase1 {
        result: SetupResult {
            setup: setup.clone(),
            source,
            accuracy,
            latency,
            reliability,
            q: build_quality_vector(accuracy.accuracy_norm, latency.latency_norm, f64::NAN, &plan.weights),
            per_class_ap: measured.map(|m| m.per_class_ap.clone()).unwrap_or_default(),
            det_a: measured.map(|m| m.det_a),
            ass_a: measured.map(|m| m.ass_a),
            frames: frames.len(),
        },
        frames,
    })
}

fn evaluate_single(plan: &EvaluationPlan, setup: &SetupId, inputs: &SetupInputs) -> Result<Phase1> {
    let label = setup.camera_label.as_deref().or(setup.lidar_label.as_deref()).unwrap_or_default();
    let spec = plan.sensor(label)?;
    let m = measure(plan, setup, inputs)?;
    let accuracy = AccuracyBreakdown::for_sensor(spec, &plan.error_models, &plan.constants, m.map, m.hota)?;
    let lat = join_timing(setup, &m.gt, &frame_latencies(&inputs.timing, spec.readout_ms))?;
    let frames = m
        .gt
        .iter()
        .zip(&m.ad)
        .zip(lat)
        .map(|((g, &ad), latency)| FrameStats {
            frame_index: g.frame_index,
            n_objects: g.objects.len() as f64,
            ad,
            latency,
        })
        .collect();
    finish(plan, setup, AccuracySource::Measured, accuracy, frames, Some(&m))
}

fn evaluate_combined(
    plan: &EvaluationPlan,
    setup: &SetupId,
    inputs: &SetupInputs,
    camera: &Phase1,
    lidar: &Phase1,
) -> Result<Phase1> {
    let cam_lat: Vec<FrameLatency> = camera.frames.iter().map(|f| f.latency).collect();
    let lid_lat: Vec<FrameLatency> = lidar.frames.iter().map(|f| f.latency).collect();
    let lat = combined_frame_latencies(&cam_lat, &lid_lat, &inputs.timing, plan.fusion)
        .map_err(|e| Error::invalid(format!("setup {setup}: {e}")))?;

    let has_results = inputs.detections.is_some() || inputs.tracks.is_some();
    if has_results {
        let m = measure(plan, setup, inputs)?;
        let accuracy = AccuracyBreakdown::fused(&camera.result.accuracy, &lidar.result.accuracy, m.map, m.hota);
        let lat = join_timing(setup, &m.gt, &lat)?;
        let frames = m
            .gt
            .iter()
            .zip(&m.ad)
            .zip(lat)
            .map(|((g, &ad), latency)| FrameStats {
                frame_index: g.frame_index,
                n_objects: g.objects.len() as f64,
                ad,
                latency,
            })
            .collect();
        return finish(plan, setup, AccuracySource::Measured, accuracy, frames, Some(&m));
    }

    let accuracy = AccuracyBreakdown::composed(&camera.result.accuracy, &lidar.result.accuracy);
    let lid: HashMap<u64, &FrameStats> = lidar.frames.iter().map(|f| (f.frame_index, f)).collect();
    let by_frame: HashMap<u64, FrameLatency> = lat.into_iter().map(|l| (l.frame_index, l)).collect();
    let frames = camera
        .frames
        .iter()
        .map(|c| {
            let l = lid
                .get(&c.frame_index)
                .ok_or_else(|| missing(setup, &format!("lidar frame {}", c.frame_index)))?;
            let latency = *by_frame
                .get(&c.frame_index)
                .ok_or_else(|| missing(setup, &format!("timing record for frame {}", c.frame_index)))?;
            Ok(FrameStats {
                frame_index: c.frame_index,
                n_objects: c.n_objects,
                ad: combine_composite(c.ad, l.ad),
                latency,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    finish(plan, setup, AccuracySource::Composed, accuracy, frames, None)
}

/// Evaluate every enumerated setup from already loaded inputs.
pub fn evaluate_loaded(
    plan: &EvaluationPlan,
    inputs: &HashMap<SetupId, SetupInputs>,
    exec: Exec,
) -> Result<Vec<SetupResult>> {
    plan.constants.validate()?;
    let setups = plan.setups();
    if setups.is_empty() {
        return Err(Error::invalid("no setups to evaluate"));
    }
    for s in &setups {
        if !inputs.contains_key(s) {
            return Err(missing(s, "no input binding"));
        }
    }

    let (singles, combined): (Vec<&SetupId>, Vec<&SetupId>) =
        setups.iter().partition(|s| s.kind != SetupKind::Combined);
    let single_results = exec.try_map(&singles, |s| evaluate_single(plan, s, &inputs[*s]))?;
    let by_id: HashMap<&SetupId, &Phase1> = singles.iter().copied().zip(&single_results).collect();

    let combined_results = exec.try_map(&combined, |s| {
        let cam = SetupId::camera(s.camera_label.clone().unwrap_or_default(), s.machine_id);
        let lid = SetupId::lidar(s.lidar_label.clone().unwrap_or_default(), s.machine_id);
        evaluate_combined(plan, s, &inputs[*s], by_id[&cam], by_id[&lid])
    })?;

    // phase 2: batch normalization, in enumeration order
    let mut results: Vec<SetupResult> = single_results
        .into_iter()
        .chain(combined_results)
        .map(|p| p.result)
        .collect();
    let raws: Vec<f64> = results.iter().map(|r| r.reliability.raw).collect();
    for (r, norm) in results.iter_mut().zip(reliability_norm_batch(&raws)) {
        r.reliability.reliability_norm = norm;
        r.q = build_quality_vector(r.accuracy.accuracy_norm, r.latency.latency_norm, norm, &plan.weights);
    }
    Ok(results)
}
