//! Experiment harness for the SPD integrators: configuration, integrator
//! comparisons against a refined reference, step-size bounds and
//! convergence studies.

pub mod commands;
pub mod config;
pub mod report;

use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Environment variable overriding the configured seed.
pub const SEED_ENV: &str = "SPDFLOW_SEED";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Numerical(String),
}

impl BenchError {
    pub fn kind(&self) -> &'static str {
        match self {
            BenchError::Config(_) => "config",
            BenchError::Io(_) => "io",
            BenchError::Numerical(_) => "numerical",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) | BenchError::Io(_) => EXIT_CONFIG,
            BenchError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    /// One-line machine-readable form for stderr.
    pub fn line(&self) -> String {
        format!("error kind={} message={:?}", self.kind(), self.to_string())
    }
}

impl From<spdflow_core::Error> for BenchError {
    fn from(e: spdflow_core::Error) -> Self {
        BenchError::Numerical(e.to_string())
    }
}

/// Parses an optional seed override value.
pub fn parse_seed(value: Option<&str>) -> Result<Option<u64>, BenchError> {
    value
        .map(|v| {
            v.trim()
                .parse::<u64>()
                .map_err(|_| BenchError::Config(format!("{SEED_ENV} must be an unsigned integer, got '{v}'")))
        })
        .transpose()
}
