//! CSV and JSON serialization of report rows.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use omega_shift::stats::PredictionReport;
use serde::Serialize;

pub const CSV_COLUMNS: [&str; 10] = [
    "statistic",
    "x",
    "k",
    "w",
    "param",
    "empirical",
    "theoretical",
    "rel_dev",
    "error_scale",
    "runtime_ms",
];

pub const R_DEFINITION_NOTE: &str = "r = (k-1)/log2(x) is used throughout; the alternative reading \
r = (k-1)*log2(x), which appears in one statement of the generating-function lemma, is not used";

pub const LOG_CONVENTION: &str = "log2(x) = ln ln x and log3(x) = ln ln ln x (natural, iterated)";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub statistic: String,
    pub x: u64,
    pub k: u32,
    pub w: u64,
    pub param: f64,
    pub empirical: f64,
    pub theoretical: f64,
    pub rel_dev: f64,
    pub error_scale: f64,
    pub runtime_ms: f64,
}

impl ReportRow {
    pub fn from_prediction(report: PredictionReport, runtime_ms: f64) -> Self {
        Self {
            statistic: report.statistic,
            x: report.x,
            k: report.k,
            w: report.w,
            param: report.param,
            empirical: report.empirical,
            theoretical: report.theoretical,
            rel_dev: report.relative_deviation,
            error_scale: report.error_scale,
            runtime_ms,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportMetadata {
    pub version: String,
    pub config_hash: String,
    pub r_definition: String,
    pub log_convention: String,
    pub x: u64,
    pub w: u64,
    pub w_rule: String,
    pub truncation_prime: u64,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    metadata: &'a ReportMetadata,
    rows: &'a [ReportRow],
}

/// `<dir>/report_x<x>.csv` and `.json`.
pub fn report_paths(dir: &Path, x: u64) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("report_x{x}.csv")),
        dir.join(format!("report_x{x}.json")),
    )
}

/// Floats are written with Rust's shortest round-trip formatting so the
/// files are byte-stable for identical values.
fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:?}")
    }
}

pub fn write_csv(path: &Path, rows: &[ReportRow]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.statistic.clone(),
            r.x.to_string(),
            r.k.to_string(),
            r.w.to_string(),
            fmt_f64(r.param),
            fmt_f64(r.empirical),
            fmt_f64(r.theoretical),
            fmt_f64(r.rel_dev),
            fmt_f64(r.error_scale),
            format!("{:.3}", r.runtime_ms),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    write_atomic(path, &bytes)
}

pub fn write_json(path: &Path, metadata: &ReportMetadata, rows: &[ReportRow]) -> std::io::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(&JsonReport { metadata, rows })?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Reads back a CSV written by [`write_csv`]; used by tests and tools.
pub fn read_csv(path: &Path) -> Result<Vec<Vec<String>>, csv::Error> {
    let mut r = csv::Reader::from_path(path)?;
    r.records()
        .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect()
}
