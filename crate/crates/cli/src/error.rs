//! Error classification onto the stable exit codes:
//! 0 success, 2 config/usage, 3 solver, 4 I/O, 5 divergence.

use coldplate_core::fdm::FdmError;
use coldplate_core::io::IoError;
use coldplate_core::pipeline::PipelineError;
use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Solver(String),
    Io(String),
    Divergence(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Solver(m) | CliError::Io(m) | CliError::Divergence(m) => {
                write!(f, "{m}")
            }
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
            CliError::Divergence(_) => 5,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::SampleSolve { .. } | PipelineError::EnergyBalance { .. } => {
                CliError::Solver(e.to_string())
            }
            PipelineError::Io(io) => io.into(),
            PipelineError::Divergence { .. } => CliError::Divergence(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<FdmError> for CliError {
    fn from(e: FdmError) -> Self {
        match e {
            FdmError::Grid(_) => CliError::Config(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<coldplate_core::geometry::GeometryError> for CliError {
    fn from(e: coldplate_core::geometry::GeometryError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<coldplate_core::grid::GridError> for CliError {
    fn from(e: coldplate_core::grid::GridError) -> Self {
        CliError::Config(e.to_string())
    }
}
