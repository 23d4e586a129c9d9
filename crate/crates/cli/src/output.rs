//! Result files: `results.csv` and its JSON mirror `results.json`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub const CSV_HEADER: &str = "experiment_id,model,s,value,error_bound,predicted,extrapolated,extrapolation_error,verdict";

/// One output row. Sweep rows carry `s`; summary rows leave it empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub experiment_id: String,
    pub model: String,
    pub s: Option<f64>,
    pub value: Option<f64>,
    pub error_bound: Option<f64>,
    pub predicted: Option<f64>,
    pub extrapolated: Option<f64>,
    pub extrapolation_error: Option<f64>,
    pub verdict: Option<String>,
}

impl Row {
    pub fn new(experiment_id: impl Into<String>, model: impl Into<String>) -> Self {
        Row {
            experiment_id: experiment_id.into(),
            model: model.into(),
            s: None,
            value: None,
            error_bound: None,
            predicted: None,
            extrapolated: None,
            extrapolation_error: None,
            verdict: None,
        }
    }

    pub fn passed(&self) -> Option<bool> {
        self.verdict.as_deref().map(|v| v == "pass")
    }
}

pub fn verdict(pass: bool) -> Option<String> {
    Some(if pass { "pass" } else { "fail" }.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Both,
}

#[derive(Debug, thiserror::Error)]
#[error("{path}: {source}")]
pub struct OutputError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> OutputError + '_ {
    move |source| OutputError {
        path: path.to_path_buf(),
        source,
    }
}

pub fn to_csv(rows: &[Row]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        w.serialize(r).expect("rows serialize to CSV");
    }
    let body = w.into_inner().expect("in-memory CSV writer");
    out.push_str(std::str::from_utf8(&body).expect("CSV is UTF-8"));
    out
}

pub fn to_json(rows: &[Row]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("rows serialize to JSON");
    s.push('\n');
    s
}

/// Write the result files into `dir`, creating it if needed. Returns the paths written.
pub fn emit_results(rows: &[Row], dir: &Path, format: Format) -> Result<Vec<PathBuf>, OutputError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    if matches!(format, Format::Csv | Format::Both) {
        let p = dir.join("results.csv");
        fs::write(&p, to_csv(rows)).map_err(io_err(&p))?;
        written.push(p);
    }
    if matches!(format, Format::Json | Format::Both) {
        let p = dir.join("results.json");
        fs::write(&p, to_json(rows)).map_err(io_err(&p))?;
        written.push(p);
    }
    Ok(written)
}
