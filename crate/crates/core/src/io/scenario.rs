//! Scenario files for the synthetic generator and the files it writes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::{corrupt_detections, generate_scenario, simulate_timing, CorruptionLog, ScenarioConfig};

use super::frames::write_frames_jsonl;
use super::timing::write_timing_csv;
use super::{read_to_string, write_atomic};

/// Simulated processing times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthTiming {
    pub base_det_ms: f64,
    pub base_track_ms: f64,
    pub per_object_track_ms: f64,
}

impl Default for SynthTiming {
    fn default() -> Self {
        SynthTiming {
            base_det_ms: 50.0,
            base_track_ms: 5.0,
            per_object_track_ms: 0.5,
        }
    }
}

/// Scenario TOML: the generator settings at top level plus an optional
/// `[timing]` table.
pub fn parse_scenario(text: &str) -> Result<(ScenarioConfig, SynthTiming)> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::invalid(format!("scenario: {e}")))?;
    let timing = match table.remove("timing") {
        Some(v) => v.try_into().map_err(|e| Error::invalid(format!("scenario timing: {e}")))?,
        None => SynthTiming::default(),
    };
    let cfg: ScenarioConfig = table.try_into().map_err(|e| Error::invalid(format!("scenario: {e}")))?;
    cfg.validate()?;
    Ok((cfg, timing))
}

pub fn load_scenario(path: &Path) -> Result<(ScenarioConfig, SynthTiming)> {
    let text = read_to_string(path).map_err(|e| match e {
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
            Error::Missing(format!("scenario file {}", path.display()))
        }
        other => other,
    })?;
    parse_scenario(&text)
}

/// Generate a scenario and write `gt.jsonl`, `detections.jsonl`,
/// `tracks.jsonl`, `timing.csv` and `corruption.json` into `dir`.
pub fn write_synthetic(dir: &Path, cfg: &ScenarioConfig, timing: &SynthTiming) -> Result<CorruptionLog> {
    let gt = generate_scenario(cfg)?;
    let (preds, log) = corrupt_detections(&gt, cfg)?;
    let counts: Vec<usize> = gt.iter().map(|f| f.objects.len()).collect();
    let times = simulate_timing(
        gt.len(),
        timing.base_det_ms,
        timing.base_track_ms,
        timing.per_object_track_ms,
        &counts,
    )?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut dets = preds.clone();
    for o in dets.iter_mut().flat_map(|f| f.objects.iter_mut()) {
        o.track_id = None;
    }
    write_frames_jsonl(&dir.join("gt.jsonl"), &gt)?;
    write_frames_jsonl(&dir.join("detections.jsonl"), &dets)?;
    write_frames_jsonl(&dir.join("tracks.jsonl"), &preds)?;
    write_timing_csv(&dir.join("timing.csv"), &times)?;
    let mut text = serde_json::to_string_pretty(&log).expect("log serializes");
    text.push('\n');
    write_atomic(&dir.join("corruption.json"), text.as_bytes())?;
    Ok(log)
}
