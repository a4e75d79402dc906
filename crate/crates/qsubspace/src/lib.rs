//! File formats, run configuration, reports and the driver behind the
//! `qsubspace` binary. The numerical work lives in [`qsubspace_core`].

pub mod config;
pub mod dumps;
pub mod fcidump;
pub mod integrals_json;
pub mod pauli_text;
pub mod report;
pub mod runner;
pub mod schema;

use std::path::PathBuf;

pub use config::{Method, RunConfig};
pub use runner::{run, RunArtifacts};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] qsubspace_core::Error),
}

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const INPUT: i32 = 3;
    pub const CAPACITY: i32 = 4;
    pub const NUMERICAL: i32 = 5;
    pub const INTERNAL: i32 = 6;

    pub const HELP: &str = "\
Exit codes:
  0  success
  1  I/O error (unreadable input, unwritable output directory)
  2  invalid arguments or configuration (unknown method or key, incompatible parameters)
  3  malformed or invalid input data (FCIDUMP syntax, broken integral symmetry)
  4  problem exceeds desk-scale capacity limits
  5  numerical failure (empty thresholded subspace, no convergence, rejected step)
  6  internal error (report failed schema validation)";
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{field}: {msg}")]
    Usage { field: String, msg: String },
    #[error("{path}: {source}")]
    Input { path: PathBuf, source: FormatError },
    #[error(transparent)]
    Core(#[from] qsubspace_core::Error),
    #[error("report schema violation: {0}")]
    Schema(String),
}

impl CliError {
    pub fn usage(field: impl Into<String>, msg: impl Into<String>) -> Self {
        CliError::Usage { field: field.into(), msg: msg.into() }
    }

    pub fn exit_code(&self) -> i32 {
        use qsubspace_core::Error as E;
        match self {
            CliError::Io { .. } => exit::IO,
            CliError::Usage { .. } => exit::USAGE,
            CliError::Input { .. } => exit::INPUT,
            CliError::Core(e) => match e {
                E::Domain(_) | E::Mismatch(_) => exit::USAGE,
                E::Data(_) => exit::INPUT,
                E::Capacity(_) => exit::CAPACITY,
                E::Decomposition(_) | E::EmptySubspace { .. } | E::NotConverged { .. } | E::Step(_) => exit::NUMERICAL,
            },
            CliError::Schema(_) => exit::INTERNAL,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            exit::IO => "io",
            exit::USAGE => "usage",
            exit::INPUT => "input",
            exit::CAPACITY => "capacity",
            exit::NUMERICAL => "numerical",
            _ => "internal",
        }
    }

    /// Machine-readable form written to stderr and `error.json`.
    pub fn to_json(&self) -> serde_json::Value {
        let field = match self {
            CliError::Usage { field, .. } => Some(field.clone()),
            _ => None,
        };
        serde_json::json!({
            "error": {
                "code": self.exit_code(),
                "kind": self.kind(),
                "field": field,
                "message": self.to_string(),
            }
        })
    }
}
