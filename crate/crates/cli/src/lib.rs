//! Batch driver: configs in, JSON/CSV/SVG out.

use std::path::PathBuf;

pub mod commands;
pub mod config;
pub mod svg;
pub mod validate;

pub use config::{Command, RunConfig};
pub use validate::{validate_config, Diagnostic, DiagnosticKind};

/// How a successful run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    /// A check on the output failed (density audit, length, property).
    Violation,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Ok => 0,
            Outcome::Violation => 2,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
    #[error("{0}: {1}")]
    Parse(PathBuf, #[source] serde_json::Error),
    #[error("cannot serialize output: {0}")]
    Serialize(#[source] serde_json::Error),
    #[error("config needs `{0}` for this command")]
    Missing(&'static str),
    #[error("no command given on the command line or in the config")]
    NoCommand,
    #[error("MAXSHAPE_THREADS must be a positive integer, got {0:?}")]
    Threads(String),
    #[error(transparent)]
    Opt(#[from] maxshape::optimizer::OptError),
    #[error(transparent)]
    Functional(#[from] maxshape::functionals::FunctionalError),
    #[error(transparent)]
    Geometry(#[from] maxshape::geometry::GeometryError),
    #[error(transparent)]
    Grid(#[from] maxshape::grid::GridError),
    #[error(transparent)]
    Pde(#[from] maxshape::pde::PdeError),
}

/// Worker count from `MAXSHAPE_THREADS`; `None` leaves the default.
pub fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var("MAXSHAPE_THREADS") {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Threads(s)),
        },
    }
}
