//! JSON reports and CSV logs of solver and heuristic runs.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::bb::{LogEvent, PhaseTimes, SolverReport, Status};
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::heuristics::TracePoint;

/// The document [`write_report`] emits.
#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument<'a> {
    pub format_version: u32,
    pub status: Status,
    pub ub: f64,
    pub lb: f64,
    pub gap: f64,
    pub incumbent_x: &'a [f64],
    pub incumbent_point_value: f64,
    pub nodes_processed: usize,
    pub nodes_pruned: usize,
    pub strong_branches_taken: usize,
    pub cells_finalized: usize,
    pub truncated_bounds: bool,
    pub times: &'a PhaseTimes,
    pub config: &'a SolverConfig,
    pub log_csv: Option<&'a Path>,
}

impl<'a> ReportDocument<'a> {
    pub fn new(report: &'a SolverReport, config: &'a SolverConfig, log_csv: Option<&'a Path>) -> Self {
        ReportDocument {
            format_version: crate::OUTPUT_FORMAT_VERSION,
            status: report.status,
            ub: report.incumbent_value,
            lb: report.global_lower_bound,
            gap: report.gap,
            incumbent_x: &report.incumbent_x,
            incumbent_point_value: report.incumbent_point_value,
            nodes_processed: report.nodes_processed,
            nodes_pruned: report.nodes_pruned,
            strong_branches_taken: report.strong_branches_taken,
            cells_finalized: report.cells_finalized,
            truncated_bounds: report.truncated_bounds,
            times: &report.times,
            config,
            log_csv,
        }
    }
}

fn create(path: &Path) -> Result<std::fs::File> {
    std::fs::File::create(path).map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Data {
            path: PathBuf::from(path),
            message: format!("{other:?}"),
        },
    }
}

/// Writes the run summary as pretty-printed JSON.
pub fn write_report(report: &SolverReport, config: &SolverConfig, log_csv: Option<&Path>, path: &Path) -> Result<()> {
    let doc = ReportDocument::new(report, config, log_csv);
    let text = serde_json::to_string_pretty(&doc)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Bound-evolution log: `wall_ms,event,node_id,lb,ub,gap`.
pub fn write_log_csv(events: &[LogEvent], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for e in events {
        w.serialize(e).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Heuristic progress log: `iter,wall_ms,value`.
pub fn write_trace_csv(trace: &[TracePoint], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for p in trace {
        w.serialize(p).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
