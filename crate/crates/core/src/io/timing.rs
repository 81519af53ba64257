//! Timing logs: CSV with header `frame,t_detection_ms,t_tracking_ms`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TimingRecord;

use super::{fmt_sig, read_to_string, write_atomic};

#[derive(Deserialize, Serialize)]
struct Row {
    frame: u64,
    t_detection_ms: f64,
    t_tracking_ms: f64,
}

/// Parse a timing log; rows come back sorted by frame. Row numbers in
/// errors count the header as row 1.
pub fn parse_timing_csv(text: &str, path: &Path) -> Result<Vec<TimingRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        msg: e.to_string(),
    })?;
    if headers.iter().collect::<Vec<_>>() != ["frame", "t_detection_ms", "t_tracking_ms"] {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: "expected header frame,t_detection_ms,t_tracking_ms".into(),
        });
    }
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: e.to_string(),
        })?;
        for (name, v) in [("t_detection_ms", row.t_detection_ms), ("t_tracking_ms", row.t_tracking_ms)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    msg: format!("{name} must be a non-negative duration, got {v}"),
                });
            }
        }
        out.push(TimingRecord {
            frame_index: row.frame,
            t_detection_ms: row.t_detection_ms,
            t_tracking_ms: row.t_tracking_ms,
        });
    }
    out.sort_by_key(|r| r.frame_index);
    Ok(out)
}

pub fn load_timing_csv(path: &Path) -> Result<Vec<TimingRecord>> {
    parse_timing_csv(&read_to_string(path)?, path)
}

pub fn format_timing_csv(records: &[TimingRecord]) -> String {
    let mut out = String::from("frame,t_detection_ms,t_tracking_ms\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{}\n",
            r.frame_index,
            fmt_sig(r.t_detection_ms),
            fmt_sig(r.t_tracking_ms)
        ));
    }
    out
}

pub fn write_timing_csv(path: &Path, records: &[TimingRecord]) -> Result<()> {
    write_atomic(path, format_timing_csv(records).as_bytes())
}
