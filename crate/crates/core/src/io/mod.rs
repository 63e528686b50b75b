//! Files: point clouds, run configuration, simulation manifests and reports.

mod cloud_file;
mod config;
mod report;

pub use cloud_file::{
    format_csv, format_pcd, parse_csv, parse_pcd, read_cloud, write_cloud, CloudFormat,
};
pub use config::{
    ExtractConfig, IcpConfig, InputConfig, MetricsConfig, RunConfig, ScenarioConfig,
    SolverConfig, CONFIG_ENV,
};
pub use report::{
    candidates_tsv, AxisFitRecord, CandidateRecord, Manifest, MetricsRecord, PoleFitRecord,
    PoleRecord, PoseRecord, Provenance, RunReport, SelectedRecord, TOOL_NAME,
};

use std::path::Path;

use thiserror::Error;

use crate::cloud::CloudError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IoError {
    #[error("{path}: {message}")]
    File { path: String, message: String },
    #[error("cannot tell the format of {0:?}; use a .pcd or .csv extension")]
    UnknownFormat(String),
    #[error("line {line}: malformed header: {message}")]
    MalformedHeader { line: usize, message: String },
    #[error("line {line}: expected {expected} fields, found {found}")]
    FieldCountMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: not a number: {token:?}")]
    NonNumericToken { line: usize, token: String },
    #[error("header declares {declared} points, data has {found}")]
    PointCountMismatch { declared: usize, found: usize },
    #[error(transparent)]
    Cloud(#[from] CloudError),
    #[error("{what}: {message}")]
    Parse { what: String, message: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid report: {0}")]
    InvalidReport(String),
}

impl IoError {
    pub(crate) fn file(path: &Path, e: std::io::Error) -> Self {
        IoError::File {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|e| IoError::file(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    std::fs::write(path, text).map_err(|e| IoError::file(path, e))
}
