use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value: {0}")]
    Numeric(String),

    /// The reserve price is only defined for a positive normalization constant.
    #[error("reserve price is undefined when K = 0")]
    UndefinedReserve,

    #[error("all {rounds} rounds have already been played")]
    SequenceOverflow { rounds: usize },

    #[error("run is incomplete: {elapsed} of {rounds} rounds played")]
    IncompleteRun { elapsed: usize, rounds: usize },

    #[error("malformed IDX data at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
