use thiserror::Error;

/// Failures of a CLI invocation, each mapped to an exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed files, flags or arguments.
    #[error("input error: {0}")]
    Input(String),
    /// A size guard refused the computation.
    #[error("guard exceeded: {0}")]
    Guard(String),
    /// A computed result failed its own consistency check.
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io { .. } => 2,
            CliError::Guard(_) => 3,
            CliError::Verification(_) => 1,
        }
    }
}

impl From<mau_core::Error> for CliError {
    fn from(e: mau_core::Error) -> Self {
        match e {
            mau_core::Error::GuardExceeded { .. } => CliError::Guard(e.to_string()),
            mau_core::Error::ResidualTooLarge { .. } => CliError::Verification(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}
