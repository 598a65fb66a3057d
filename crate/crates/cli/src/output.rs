//! CSV rows, number formatting and atomic output files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::CliError;

pub const HEADER: [&str; 11] =
    ["s", "axis2", "m1x", "m1z", "m2x", "m2z", "energy", "delta1", "delta2", "branch", "flags"];

/// One CSV record. `None` fields are written empty.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub s: f64,
    pub axis2: Option<f64>,
    pub m1x: Option<f64>,
    pub m1z: Option<f64>,
    pub m2x: Option<f64>,
    pub m2z: Option<f64>,
    pub energy: Option<f64>,
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
    pub branch: String,
    pub flags: Vec<&'static str>,
}

impl ScanRow {
    /// A row for a point whose solve failed.
    pub fn failed(s: f64, axis2: Option<f64>) -> Self {
        ScanRow {
            s,
            axis2,
            m1x: None,
            m1z: None,
            m2x: None,
            m2z: None,
            energy: None,
            delta1: None,
            delta2: None,
            branch: String::new(),
            flags: vec!["failed"],
        }
    }

    fn record(&self) -> [String; 11] {
        let f = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
        [
            fmt_num(self.s),
            f(self.axis2),
            f(self.m1x),
            f(self.m1z),
            f(self.m2x),
            f(self.m2z),
            f(self.energy),
            f(self.delta1),
            f(self.delta2),
            self.branch.clone(),
            self.flags.join(";"),
        ]
    }
}

/// Rounds to 12 significant digits and prints the shortest decimal that
/// reads back to the rounded value. Independent of locale.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return String::new();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    // Avoid a signed zero in the output.
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    format!("{rounded}")
}

pub fn csv_bytes(rows: &[ScanRow]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER).map_err(|e| CliError::Io(e.to_string()))?;
    for r in rows {
        w.write_record(r.record()).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

/// Refuses to proceed when any target already exists, so a rerun never
/// overwrites or mixes with an earlier result.
pub fn ensure_absent(paths: &[PathBuf]) -> Result<(), CliError> {
    let present: Vec<String> = paths.iter().filter(|p| p.exists()).map(|p| p.display().to_string()).collect();
    if present.is_empty() {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "output already exists, remove it or choose another path: {}",
            present.join(", ")
        )))
    }
}

/// Writes `bytes` to `<path>.partial` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let mut partial = path.as_os_str().to_owned();
    partial.push(".partial");
    let partial = PathBuf::from(partial);
    let mut f = fs::File::create(&partial).map_err(io)?;
    f.write_all(bytes).map_err(io)?;
    f.sync_all().map_err(io)?;
    fs::rename(&partial, path).map_err(io)
}
