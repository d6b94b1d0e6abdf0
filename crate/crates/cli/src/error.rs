use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable, malformed or invalid input.
    #[error("{0}")]
    Input(String),
    /// A solver refused the instance.
    #[error("{0}")]
    Precondition(String),
    /// Exact solvers disagree.
    #[error("{0}")]
    Disagreement(String),
    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Disagreement(_) => 4,
            CliError::Output(_) => 1,
        }
    }
}

impl From<copart_core::Error> for CliError {
    fn from(e: copart_core::Error) -> Self {
        CliError::Precondition(e.to_string())
    }
}
