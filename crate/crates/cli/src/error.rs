use thiserror::Error;

use syncstab_core::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid scenario: {0}")]
    Invariant(String),

    #[error("stability requirement not met: {0}")]
    Unstable(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::Unstable(_) => 4,
            CliError::Numerical(_) => 5,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::InvalidParameter { .. } | CoreError::SingularNetwork(_) | CoreError::DegenerateModel(_) => {
                CliError::Invariant(msg)
            }
            CoreError::NoEquilibrium | CoreError::DesignInfeasible(_) => CliError::Unstable(msg),
            CoreError::NonDifferentiable(_) | CoreError::Diverged { .. } => CliError::Numerical(msg),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e.to_string()))
    }
}
