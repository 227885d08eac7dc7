//! Command-line front end for ReLU barrier certificate checking: problem
//! loading, JSON reports, SMT-LIB export and SVG plots.

pub mod error;
pub mod export;
pub mod plot;
pub mod problem;
pub mod report;

use std::fs;
use std::path::Path;

pub use error::{CliError, Result};
pub use problem::{load_network, load_problem, Problem};
pub use report::Report;

/// Runs the full pipeline on a loaded problem.
pub fn verify(problem: &Problem) -> Result<Report> {
    let cert = rbc_core::verify_certificate(
        &problem.network,
        &problem.dynamics,
        &problem.initial,
        &problem.unsafe_set,
        &problem.config,
    )?;
    Ok(Report::new(problem, &cert))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Invalid(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

pub fn read_report(path: &Path) -> Result<Report> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::json(path, e))
}
