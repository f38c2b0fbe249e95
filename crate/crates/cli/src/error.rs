use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot write output: {0}")]
    Output(String),

    #[error(transparent)]
    Core(#[from] procure_learn::Error),
}

impl HarnessError {
    /// Process exit code: 2 for bad configs and unwritable outputs, 1 for
    /// failures during a run.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Output(_) => 2,
            HarnessError::Core(procure_learn::Error::InvalidConfig(_) | procure_learn::Error::InvalidInput(_)) => 2,
            HarnessError::Core(procure_learn::Error::Io(_) | procure_learn::Error::Format { .. }) => 2,
            HarnessError::Core(_) => 1,
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Output(e.to_string())
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Output(e.to_string())
    }
}
