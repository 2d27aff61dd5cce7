use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or inconsistent configuration, bad arguments, or a CSV
    /// that does not match the requested plot.
    #[error("config error: {0}")]
    Config(String),

    /// A simulation or quadrature failure while running a valid plan.
    #[error("numerical failure: {0}")]
    Numerical(#[from] fclab_core::Error),

    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

pub(crate) fn io_err(path: &std::path::Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}
