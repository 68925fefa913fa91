use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_UNRESOLVED: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("calibration file {path}: {reason}")]
    Calibration { path: String, reason: String },

    #[error("unknown suite {0:?}")]
    UnknownSuite(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] qcrit::Error),

    #[error("suites failed: {}", .0.join(", "))]
    SuitesFailed(Vec<String>),
}

/// Machine-readable form printed on stderr.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub code: &'static str,
    pub message: String,
    pub context: Value,
}

impl CliError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn code(&self) -> &'static str {
        use qcrit::Error as E;
        match self {
            CliError::InvalidConfig(_) => "invalid_config",
            CliError::Calibration { .. } => "invalid_calibration",
            CliError::UnknownSuite(_) => "unknown_suite",
            CliError::Io { .. } => "io",
            CliError::SuitesFailed(_) => "suite_failed",
            CliError::Core(e) => match e {
                E::Config(_) | E::SizeMismatch { .. } | E::MeshMismatch | E::NonFinite(_) => "invalid_config",
                E::Domain(_) => "precondition",
                E::NonConvergence { .. } => "non_convergence",
                E::Supercritical(_) => "supercritical",
                E::NotPositiveDefinite => "not_positive_definite",
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.code() {
            "non_convergence" | "supercritical" | "not_positive_definite" | "suite_failed" => EXIT_UNRESOLVED,
            _ => EXIT_INVALID,
        }
    }

    pub fn record(&self) -> ErrorRecord {
        let context = match self {
            CliError::Calibration { path, .. } | CliError::Io { path, .. } => json!({ "path": path }),
            CliError::UnknownSuite(s) => json!({ "suite": s, "known": crate::verify::SUITES }),
            CliError::SuitesFailed(names) => json!({ "failed": names }),
            CliError::Core(qcrit::Error::NonConvergence { iterations, rel_grad, .. }) => {
                json!({ "iterations": iterations, "rel_grad": rel_grad })
            }
            _ => Value::Null,
        };
        ErrorRecord {
            code: self.code(),
            message: self.to_string(),
            context,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
