//! Deterministic file emission: CSV tables, JSON sidecars, content digests,
//! and the run manifest.
//!
//! Identical config bytes produce identical report bytes; the manifest's
//! `wall_ms` field is the single value that varies between reruns, and it
//! lives only in the manifest so the data files stay byte-stable.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use dirmix_core::report::ConvergenceReport;
use dirmix_core::Int;

use crate::error::CliError;

type Result<V> = std::result::Result<V, CliError>;

#[derive(Debug, Clone, Serialize)]
pub struct EmittedFile {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub verb: String,
    pub config_sha256: String,
    pub thread_count: Option<usize>,
    /// One flag per report row: whether the exact rational column is filled.
    pub rows_exact: Vec<bool>,
    pub files: Vec<EmittedFile>,
    /// Wall-clock duration of the run; varies between reruns and is
    /// deliberately isolated here.
    pub wall_ms: u128,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        let _ = write!(hex, "{byte:02x}");
    }
    hex
}

/// The report as CSV with one row per index and empty exact columns for
/// irrational values.
pub fn report_csv(report: &ConvergenceReport<Int>) -> String {
    let mut csv = String::from("index,value_decimal,value_exact_num,value_exact_den\n");
    for row in &report.rows {
        match &row.exact {
            Some(r) => {
                let _ = writeln!(csv, "{},{},{},{}", row.index, row.value, r.numer(), r.denom());
            }
            None => {
                let _ = writeln!(csv, "{},{},,", row.index, row.value);
            }
        }
    }
    csv
}

/// The JSON sidecar: full report metadata plus verb-specific extras merged
/// at the top level.
pub fn report_sidecar(report: &ConvergenceReport<Int>, extra: Value) -> Value {
    let rows: Vec<Value> = report
        .rows
        .iter()
        .map(|r| {
            json!({
                "index": r.index,
                "value": r.value,
                "exact": r.exact.as_ref().map(|x| x.to_string()),
            })
        })
        .collect();
    let envelope = report.envelope.as_ref().map(|e| {
        json!({
            "window": e.window,
            "running_max": e.running_max,
            "no_limit_claimed": e.no_limit_claimed,
        })
    });
    let mut sidecar = json!({
        "quantity": report.quantity,
        "system": report.system,
        "detail": report.detail,
        "rows": rows,
        "envelope": envelope,
    });
    if let (Some(obj), Some(extra_obj)) = (sidecar.as_object_mut(), extra.as_object()) {
        for (k, v) in extra_obj {
            obj.insert(k.clone(), v.clone());
        }
    }
    sidecar
}

fn write_file(out_dir: &Path, name: &str, bytes: &[u8]) -> Result<EmittedFile> {
    let path = out_dir.join(name);
    fs::write(&path, bytes)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(EmittedFile { name: name.to_string(), sha256: sha256_hex(bytes) })
}

/// Writes `<stem>.csv` and `<stem>.json` into `out_dir` and returns their
/// digests.
pub fn write_report(
    out_dir: &Path,
    stem: &str,
    report: &ConvergenceReport<Int>,
    extra: Value,
) -> Result<Vec<EmittedFile>> {
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    let csv = write_file(out_dir, &format!("{stem}.csv"), report_csv(report).as_bytes())?;
    let sidecar = serde_json::to_string_pretty(&report_sidecar(report, extra))
        .expect("sidecar serialization cannot fail");
    let json = write_file(out_dir, &format!("{stem}.json"), sidecar.as_bytes())?;
    Ok(vec![csv, json])
}

pub fn write_manifest(out_dir: &Path, manifest: &RunManifest) -> Result<PathBuf> {
    let path = out_dir.join("manifest.json");
    let body =
        serde_json::to_string_pretty(manifest).expect("manifest serialization cannot fail");
    fs::write(&path, body)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}
