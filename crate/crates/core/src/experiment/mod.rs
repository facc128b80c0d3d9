//! Declarative reproduction of the KK noise experiments.
//!
//! An experiment expands into independent runs (one per `n_s` x `cspr_db` x
//! `decision_index` combination). Each run simulates its symbols in parallel
//! with one random stream per symbol, so results do not depend on thread count.

mod config;
mod output;
mod runner;

use std::path::PathBuf;

use thiserror::Error;

use crate::error::KkError;

pub use config::{
    decision_phase_indices, ConfigFile, ExperimentConfig, ExperimentKind, GridProfile, MIN_SYMBOLS,
};
pub use output::{
    constellation_csv, ensure_writable, svg_from_csv, write_outputs, Manifest, ManifestFile,
    ManifestRun, CSV_HEADER,
};
pub use runner::{
    fit_line, run_experiment, run_point, Check, ClusterReport, ExperimentOutcome, ExperimentReport,
    RunReport, RunResult, RunSpec, SweepReport, Tolerance,
};

pub const SOFTWARE_NAME: &str = env!("CARGO_PKG_NAME");
pub const SOFTWARE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Simulation(#[from] KkError),
}

impl ExperimentError {
    /// Process exit code: 2 for config problems, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) | ExperimentError::Simulation(_) => 2,
            ExperimentError::Io { .. } => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ExperimentError::Io {
            path: path.into(),
            source,
        }
    }
}
