//! CSV and JSON serialization of scenario reports.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::json;
use thiserror::Error;

use super::RunConfig;
use crate::scenario::ScenarioReport;

#[derive(Debug, Error)]
#[error("cannot write {}: {source}", .path.display())]
pub struct OutputError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

/// 17 significant digits; `nan`, `inf` and `-inf` for non-finite values.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".to_string(), format_float)
}

pub(crate) fn csv_bytes(header: Vec<String>, rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn timeseries_header(dim: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t", "candidate", "residual", "purity_defect", "min_eigenvalue", "entropy"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((1..=dim).map(|i| format!("prob_outcome_{i}")));
    h
}

/// One row per candidate and sample time, candidates in label order.
pub fn timeseries_csv(report: &ScenarioReport) -> Vec<u8> {
    let rows = report.series.iter().flat_map(|series| {
        series.samples.iter().map(move |s| {
            let mut row = vec![
                format_float(s.t),
                series.candidate.label().to_string(),
                opt(s.residual),
                format_float(s.purity_defect),
                format_float(s.min_eigenvalue),
                opt(s.entropy),
            ];
            row.extend(s.probabilities.iter().map(|&p| format_float(p)));
            row
        })
    });
    csv_bytes(timeseries_header(report.dim), rows)
}

pub fn marginals_csv(report: &ScenarioReport) -> Vec<u8> {
    let header = ["t", "outcome", "q", "p", "weight"].map(String::from).to_vec();
    let rows = report.marginals.iter().map(|m| {
        vec![
            format_float(m.t),
            (m.outcome + 1).to_string(),
            format_float(m.q),
            format_float(m.p),
            format_float(m.weight),
        ]
    });
    csv_bytes(header, rows)
}

pub fn entropy_csv(arrow: &[(f64, f64)]) -> Vec<u8> {
    let header = vec!["t".to_string(), "entropy".to_string()];
    csv_bytes(header, arrow.iter().map(|&(t, s)| vec![format_float(t), format_float(s)]))
}

/// Verdict, configuration echo, tool version and the full report.
pub fn report_json(report: &ScenarioReport, config: &RunConfig) -> serde_json::Value {
    json!({
        "tool": "hybridlab",
        "version": crate::VERSION,
        "verdict": report.verdict,
        "verdict_chain": report.verdict.chain(),
        "config": config.echo(),
        "report": report,
    })
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), OutputError> {
    fs::write(path, bytes).map_err(|source| OutputError { path: path.to_path_buf(), source })
}

pub(crate) fn create_dir(path: &Path) -> Result<(), OutputError> {
    fs::create_dir_all(path).map_err(|source| OutputError { path: path.to_path_buf(), source })
}

pub(crate) fn json_bytes(value: &serde_json::Value) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("JSON values serialize");
    bytes.push(b'\n');
    bytes
}

/// Writes `report.json`, `timeseries.csv` and `plotdata/` under `dir` and
/// returns the paths written.
pub fn write_scenario(report: &ScenarioReport, config: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>, OutputError> {
    let plot = dir.join("plotdata");
    create_dir(&plot)?;
    let mut files = vec![
        (dir.join("report.json"), json_bytes(&report_json(report, config))),
        (dir.join("timeseries.csv"), timeseries_csv(report)),
        (plot.join("marginals.csv"), marginals_csv(report)),
    ];
    if let Some(arrow) = &report.entropy_arrow {
        files.push((plot.join("entropy.csv"), entropy_csv(arrow)));
    }
    for (path, bytes) in &files {
        write_file(path, bytes)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}
