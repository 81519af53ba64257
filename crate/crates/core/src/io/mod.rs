//! File formats, run configuration and report emission.

mod cloud;
mod config;
mod dair;
mod frames;
mod report;
mod scenario;
mod timing;

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub use cloud::{read_calibration, read_cloud, read_png, write_cloud, write_png, CloudDescriptor, CLOUD_FORMAT};
pub use config::{load_run_config, parse_run_config, GtSource, InputBinding, RunConfig};
pub use dair::{load_labels_dair, map_dair_class};
pub use frames::{format_frames_jsonl, load_frames_jsonl, parse_frames_jsonl, write_frames_jsonl};
pub use report::{
    load_report_json, qspace_csv, report_csv, report_json, write_csv_reports, write_report,
    REPORT_CSV, REPORT_JSON, QSPACE_CSV,
};
pub use scenario::{load_scenario, parse_scenario, write_synthetic, SynthTiming};
pub use timing::{format_timing_csv, load_timing_csv, parse_timing_csv, write_timing_csv};

/// Format with 9 significant digits, shortest decimal form.
pub fn fmt_sig(x: f64) -> String {
    round_sig(x).to_string()
}

/// Round to 9 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

/// Write via a temporary sibling and rename into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
