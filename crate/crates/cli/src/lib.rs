//! Experiment front end for the transport solvers: configuration files,
//! run and convergence pipelines, the oracle suite and SVG plots.

pub mod config;
pub mod oracle;
pub mod plot;
pub mod run;
pub mod svg;

use thiserror::Error;

pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_POSITIVITY: i32 = 3;
pub const EXIT_TOLERANCE: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Positivity(String),
    #[error("tolerance check failed: {0}")]
    Tolerance(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{0}")]
    Schema(String),
    #[error(transparent)]
    Core(frg_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Schema(_) => EXIT_CONFIG,
            CliError::Positivity(_) => EXIT_POSITIVITY,
            CliError::Tolerance(_) => EXIT_TOLERANCE,
            CliError::Io(_) | CliError::Core(_) => EXIT_OTHER,
        }
    }
}

impl From<frg_core::Error> for CliError {
    fn from(e: frg_core::Error) -> Self {
        use frg_core::Error as E;
        match e {
            E::Config(_) | E::UnknownProblem(_) | E::InvalidMesh(_) | E::TooFewQuadraturePoints(_) => {
                CliError::Config(e.to_string())
            }
            E::PositivityLost(p) => CliError::Positivity(p.to_string()),
            other => CliError::Core(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
