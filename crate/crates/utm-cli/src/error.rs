//! CLI error type and its machine-readable form.

use serde_json::json;
use thiserror::Error;
use utm_core::UtmError;

#[derive(Debug, Error)]
pub enum CliError {
    /// Schema or syntax violation, located by key path and position.
    #[error("{path}: {message} (line {line}, column {column})")]
    Config { path: String, line: usize, column: usize, message: String },
    #[error(transparent)]
    Core(#[from] UtmError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Usage(String),
    /// Some checks of `validate` or `identities` failed.
    #[error("{failed} of {total} checks failed")]
    Checks { failed: usize, total: usize },
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, err: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), message: err.to_string() }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "config",
            CliError::Core(_) => "numerics",
            CliError::Io { .. } => "io",
            CliError::Usage(_) => "usage",
            CliError::Checks { .. } => "checks",
        }
    }

    /// Error object for stderr.
    pub fn to_json(&self) -> String {
        let mut body = json!({ "kind": self.kind(), "message": self.to_string() });
        match self {
            CliError::Config { path, line, column, message } => {
                body["path"] = json!(path);
                body["line"] = json!(line);
                body["column"] = json!(column);
                body["message"] = json!(message);
            }
            CliError::Core(e) => body["variant"] = json!(core_variant(e)),
            CliError::Io { path, .. } => body["path"] = json!(path),
            CliError::Checks { failed, total } => {
                body["failed"] = json!(failed);
                body["total"] = json!(total);
            }
            CliError::Usage(_) => {}
        }
        json!({ "error": body }).to_string()
    }
}

fn core_variant(e: &UtmError) -> &'static str {
    match e {
        UtmError::Evaluation { .. } => "evaluation",
        UtmError::ContourRadius { .. } => "contour_radius",
        UtmError::Dissipativity { .. } => "dissipativity",
        UtmError::Assumption(_) => "assumption",
        UtmError::Stiffness { .. } => "stiffness",
        UtmError::Truncation(_) => "truncation",
        UtmError::Quadrature(_) => "quadrature",
        UtmError::BoundaryRank => "boundary_rank",
        UtmError::Case(_) => "case",
        UtmError::Coverage { .. } => "coverage",
        UtmError::Argument(_) => "argument",
        UtmError::Stability(_) => "stability",
        UtmError::Budget { .. } => "budget",
        UtmError::RootIsolation(_) => "root_isolation",
        UtmError::Oracle(_) => "oracle",
        UtmError::IrregularBoundary { .. } => "irregular_boundary",
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
