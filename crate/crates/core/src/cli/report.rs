//! The JSON run report.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::CliError;
use crate::analyze::{DriftCertificate, TailStats, VerdictReport};
use crate::model::IntegrabilityReport;
use crate::simulate::SimError;
use crate::spectral::SpectralReport;

/// A path that left the representable range during `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overflow {
    pub path: usize,
    pub time: f64,
    pub state: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub n_paths: usize,
    pub completed: usize,
    pub overflows: Vec<Overflow>,
}

impl SimulationSummary {
    pub(crate) fn overflow(path: usize, e: &SimError) -> Option<Overflow> {
        match *e {
            SimError::NonFiniteState { time, state } => Some(Overflow { path, time, state }),
            _ => None,
        }
    }
}

/// Everything a run produced. `config_echo` (whose seed is the one actually
/// used) reproduces every number except `wall_clock_seconds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool_version: String,
    pub command: String,
    pub config_echo: RunConfig,
    pub integrability: IntegrabilityReport,
    pub verdict: VerdictReport,
    pub spectral: SpectralReport,
    pub simulation: Option<SimulationSummary>,
    pub tail_stats: Option<TailStats>,
    pub drift_certificates: Option<Vec<DriftCertificate>>,
    pub wall_clock_seconds: f64,
    pub sample_files: Vec<String>,
}

pub const REPORT_FILE: &str = "report.json";

/// Writes `report.json` into `dir` (created if missing) and returns the
/// path of every file the run produced.
pub fn emit_report(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(REPORT_FILE);
    let mut text = serde_json::to_string_pretty(report).map_err(|e| CliError::Io(format!("report: {e}")))?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut paths = vec![path];
    paths.extend(report.sample_files.iter().map(|f| dir.join(f)));
    Ok(paths)
}

/// Reads a report back.
pub fn read_report(path: &Path) -> Result<RunReport, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
