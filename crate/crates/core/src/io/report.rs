//! Report files: per-setup table, quality-space coordinates and full JSON.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::pipeline::SetupResult;

use super::{fmt_sig, read_to_string, round_sig, write_atomic};

pub const REPORT_CSV: &str = "report.csv";
pub const QSPACE_CSV: &str = "qspace.csv";
pub const REPORT_JSON: &str = "report.json";

#[derive(Serialize, Deserialize)]
struct ReportDoc {
    results: Vec<SetupResult>,
}

fn table(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

pub fn report_csv(results: &[SetupResult]) -> String {
    table(
        &["setup", "machine", "mAP", "A_sld", "HOTA", "A_norm", "L_norm", "R_norm", "Q_mag"],
        results.iter().map(|r| {
            vec![
                r.setup.sensor_label(),
                r.setup.machine_id.to_string(),
                fmt_sig(r.accuracy.a_d),
                fmt_sig(r.accuracy.a_sld),
                fmt_sig(r.accuracy.a_t),
                fmt_sig(r.q.accuracy_norm),
                fmt_sig(r.q.latency_norm),
                fmt_sig(r.q.reliability_norm),
                fmt_sig(r.q.magnitude),
            ]
        }),
    )
}

pub fn qspace_csv(results: &[SetupResult]) -> String {
    table(
        &["setup", "machine", "accuracy", "latency", "reliability", "magnitude"],
        results.iter().map(|r| {
            vec![
                r.setup.sensor_label(),
                r.setup.machine_id.to_string(),
                fmt_sig(r.q.accuracy_norm),
                fmt_sig(r.q.latency_norm),
                fmt_sig(r.q.reliability_norm),
                fmt_sig(r.q.magnitude),
            ]
        }),
    )
}

fn round_all(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64().map(round_sig).and_then(serde_json::Number::from_f64) {
                *n = x;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_all),
        Value::Object(o) => o.values_mut().for_each(round_all),
        _ => {}
    }
}

pub fn report_json(results: &[SetupResult]) -> String {
    let mut v = serde_json::to_value(ReportDoc {
        results: results.to_vec(),
    })
    .expect("results serialize");
    round_all(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
    s.push('\n');
    s
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Write `report.csv` and `qspace.csv` into `dir`.
pub fn write_csv_reports(dir: &Path, results: &[SetupResult]) -> Result<()> {
    ensure_dir(dir)?;
    write_atomic(&dir.join(REPORT_CSV), report_csv(results).as_bytes())?;
    write_atomic(&dir.join(QSPACE_CSV), qspace_csv(results).as_bytes())
}

/// Write all report files into `dir`.
pub fn write_report(dir: &Path, results: &[SetupResult]) -> Result<()> {
    write_csv_reports(dir, results)?;
    write_atomic(&dir.join(REPORT_JSON), report_json(results).as_bytes())
}

pub fn load_report_json(path: &Path) -> Result<Vec<SetupResult>> {
    let text = read_to_string(path).map_err(|e| match e {
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
            Error::Missing(format!("report {}", path.display()))
        }
        other => other,
    })?;
    let doc: ReportDoc = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        msg: e.to_string(),
    })?;
    Ok(doc.results)
}
