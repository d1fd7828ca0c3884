use qex_core::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::SolverExhausted { .. }
            | Error::BezoutBoundExceeded { .. }
            | Error::SpectrumIncomplete { .. }
            | Error::NoConvergence { .. } => CliError::Solver(e.to_string()),
            Error::ScalarOperator => CliError::Validation(format!("scalar operator: {e}")),
            Error::Inadmissible { condition } => CliError::Validation(format!("inadmissible constants: violates {condition}")),
            other => CliError::Validation(other.to_string()),
        }
    }
}
