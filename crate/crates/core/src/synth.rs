//! Seeded synthetic scenarios with known ground truth, used as oracle
//! fixtures for the metrics.
//!
//! Random numbers come from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64`, so a given configuration produces the same scene on every
//! platform. Each stage draws from its own stream (`set_stream`): 0 for the
//! scene, 1 for corruption.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::iou_bev;
use crate::model::{normalize_yaw, Box3D, FrameRecord, ObjectClass, ObjectRecord, TimingRecord};

/// Frame period of generated sequences (10 Hz).
pub const FRAME_PERIOD_US: i64 = 100_000;

/// Track ids handed out for switched identities and false positives start here.
pub const SYNTH_ID_BASE: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_frames: usize,
    /// Objects per class.
    pub objects: BTreeMap<ObjectClass, usize>,
    /// Speed range in meters per frame; heading is drawn uniformly.
    pub speed_min: f64,
    pub speed_max: f64,
    /// Half-extent of the square arena, meters.
    pub arena_half_m: f64,
    pub pos_sigma_m: f64,
    pub yaw_sigma_rad: f64,
    pub dropout: f64,
    /// Expected false positives per frame.
    pub fp_rate: f64,
    pub id_switch_prob: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_frames: 10,
            objects: BTreeMap::from([(ObjectClass::Car, 2)]),
            speed_min: 0.5,
            speed_max: 1.5,
            arena_half_m: 60.0,
            pos_sigma_m: 0.0,
            yaw_sigma_rad: 0.0,
            dropout: 0.0,
            fp_rate: 0.0,
            id_switch_prob: 0.0,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("dropout", self.dropout),
            ("id_switch_prob", self.id_switch_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        for (name, v) in [
            ("pos_sigma_m", self.pos_sigma_m),
            ("yaw_sigma_rad", self.yaw_sigma_rad),
            ("fp_rate", self.fp_rate),
            ("speed_min", self.speed_min),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.speed_max < self.speed_min {
            return Err(Error::invalid("speed_max below speed_min"));
        }
        if !(self.arena_half_m > 0.0) {
            return Err(Error::invalid("arena_half_m must be > 0"));
        }
        Ok(())
    }
}

/// Nominal (length, width, height) in meters.
pub fn class_dimensions(cls: ObjectClass) -> (f64, f64, f64) {
    match cls {
        ObjectClass::Pedestrian => (0.8, 0.7, 1.75),
        ObjectClass::Bike => (1.8, 0.7, 1.5),
        ObjectClass::Car => (4.5, 1.9, 1.6),
        ObjectClass::Truck => (10.0, 2.6, 3.5),
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Ground-truth scene: objects on constant-velocity tracks with stable ids
/// (1, 2, ...). Each object gets its own lane 8 m apart so tracks never
/// overlap.
pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<Vec<FrameRecord>> {
    cfg.validate()?;
    let mut rng = rng_for(cfg.seed, 0);
    struct Track {
        id: u64,
        cls: ObjectClass,
        x0: f64,
        y0: f64,
        vx: f64,
        vy: f64,
        yaw: f64,
    }
    let mut tracks = Vec::new();
    let mut lane = 0usize;
    for (&cls, &count) in &cfg.objects {
        for _ in 0..count {
            let heading = if rng.random_bool(0.5) { 0.0 } else { std::f64::consts::PI };
            let speed = if cfg.speed_max > cfg.speed_min {
                rng.random_range(cfg.speed_min..cfg.speed_max)
            } else {
                cfg.speed_min
            };
            let x0 = rng.random_range(-cfg.arena_half_m / 2.0..cfg.arena_half_m / 2.0);
            let y0 = -cfg.arena_half_m + 4.0 + 8.0 * lane as f64;
            tracks.push(Track {
                id: tracks.len() as u64 + 1,
                cls,
                x0,
                y0,
                vx: speed * heading.cos(),
                vy: speed * heading.sin(),
                yaw: normalize_yaw(heading),
            });
            lane += 1;
        }
    }
    let frames = (0..cfg.n_frames)
        .map(|t| {
            let objects = tracks
                .iter()
                .map(|tr| {
                    let (l, w, h) = class_dimensions(tr.cls);
                    let bbox = Box3D {
                        center_x: tr.x0 + tr.vx * t as f64,
                        center_y: tr.y0 + tr.vy * t as f64,
                        center_z: h / 2.0,
                        length: l,
                        width: w,
                        height: h,
                        yaw: tr.yaw,
                    };
                    ObjectRecord::gt(tr.cls, bbox, Some(tr.id))
                })
                .collect();
            FrameRecord::new(t as u64, t as i64 * FRAME_PERIOD_US, objects)
        })
        .collect();
    Ok(frames)
}

/// What happened to each ground-truth object in one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameCorruption {
    pub frame_index: u64,
    /// Ground-truth track ids that were kept (possibly perturbed).
    pub kept: Vec<u64>,
    pub dropped: Vec<u64>,
    /// Number of injected false positives.
    pub false_positives: usize,
    /// Ground-truth ids whose predicted identity changed at this frame.
    pub id_switches: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CorruptionLog {
    pub frames: Vec<FrameCorruption>,
}

impl CorruptionLog {
    pub fn kept_count(&self) -> usize {
        self.frames.iter().map(|f| f.kept.len()).sum()
    }
}

/// Predictions derived from ground truth by dropout, Gaussian position and
/// yaw noise, injected false positives and identity switches.
///
/// Kept objects score 1 when there is no position or yaw noise and
/// `1 − 0.5·u` (u uniform) otherwise; false positives score `0.5·u`.
/// False positives are placed uniformly in the arena and never overlap any
/// ground truth of that frame above BEV IoU 0.1.
pub fn corrupt_detections(gt: &[FrameRecord], cfg: &ScenarioConfig) -> Result<(Vec<FrameRecord>, CorruptionLog)> {
    cfg.validate()?;
    let mut rng = rng_for(cfg.seed, 1);
    let pos = Normal::new(0.0, cfg.pos_sigma_m).map_err(|e| Error::invalid(e.to_string()))?;
    let yaw = Normal::new(0.0, cfg.yaw_sigma_rad).map_err(|e| Error::invalid(e.to_string()))?;
    let noisy = cfg.pos_sigma_m > 0.0 || cfg.yaw_sigma_rad > 0.0;
    let classes: Vec<ObjectClass> = cfg.objects.keys().copied().collect();

    let mut identity: BTreeMap<u64, u64> = BTreeMap::new();
    let mut next_id = SYNTH_ID_BASE;
    let mut log = CorruptionLog::default();
    let mut preds = Vec::with_capacity(gt.len());

    for frame in gt {
        let mut fc = FrameCorruption {
            frame_index: frame.frame_index,
            kept: Vec::new(),
            dropped: Vec::new(),
            false_positives: 0,
            id_switches: Vec::new(),
        };
        let mut objects = Vec::new();
        for o in &frame.objects {
            let gid = o.track_id.unwrap_or(0);
            if rng.random::<f64>() < cfg.dropout {
                fc.dropped.push(gid);
                continue;
            }
            let current = identity.entry(gid).or_insert(gid);
            if rng.random::<f64>() < cfg.id_switch_prob {
                *current = next_id;
                next_id += 1;
                fc.id_switches.push(gid);
            }
            let mut b = o.bbox;
            if noisy {
                b.center_x += pos.sample(&mut rng);
                b.center_y += pos.sample(&mut rng);
                b.yaw = normalize_yaw(b.yaw + yaw.sample(&mut rng));
            }
            let score = if noisy { 1.0 - 0.5 * rng.random::<f64>() } else { 1.0 };
            objects.push(ObjectRecord::pred(o.cls, b, score, Some(*current)));
            fc.kept.push(gid);
        }

        let whole = cfg.fp_rate.floor() as usize;
        let n_fp = whole + usize::from(rng.random::<f64>() < cfg.fp_rate.fract());
        for _ in 0..n_fp {
            if classes.is_empty() {
                break;
            }
            let cls = classes[rng.random_range(0..classes.len())];
            let (l, w, h) = class_dimensions(cls);
            // bounded rejection sampling; a crowded frame may get fewer FPs
            for _ in 0..100 {
                let b = Box3D {
                    center_x: rng.random_range(-cfg.arena_half_m..cfg.arena_half_m),
                    center_y: rng.random_range(-cfg.arena_half_m..cfg.arena_half_m),
                    center_z: h / 2.0,
                    length: l,
                    width: w,
                    height: h,
                    yaw: rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
                };
                if frame.objects.iter().all(|g| iou_bev(&g.bbox, &b) <= 0.1) {
                    let score = 0.5 * rng.random::<f64>();
                    objects.push(ObjectRecord::pred(cls, b, score, Some(next_id)));
                    next_id += 1;
                    fc.false_positives += 1;
                    break;
                }
            }
        }
        preds.push(FrameRecord::new(frame.frame_index, frame.timestamp_us, objects));
        log.frames.push(fc);
    }
    Ok((preds, log))
}

/// Timing log with tracking time linear in the object count and constant
/// detection time.
pub fn simulate_timing(
    n_frames: usize,
    base_det_ms: f64,
    base_track_ms: f64,
    per_object_track_ms: f64,
    objects_per_frame: &[usize],
) -> Result<Vec<TimingRecord>> {
    if [base_det_ms, base_track_ms, per_object_track_ms].iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::invalid("timing parameters must be >= 0"));
    }
    if objects_per_frame.len() < n_frames {
        return Err(Error::invalid(format!(
            "{} object counts for {n_frames} frames",
            objects_per_frame.len()
        )));
    }
    Ok((0..n_frames)
        .map(|k| TimingRecord {
            frame_index: k as u64,
            t_detection_ms: base_det_ms,
            t_tracking_ms: base_track_ms + per_object_track_ms * objects_per_frame[k] as f64,
        })
        .collect())
}
