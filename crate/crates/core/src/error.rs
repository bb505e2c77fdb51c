use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),

    #[error("cardinality mismatch: {0}")]
    CardinalityMismatch(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("settings schedule is empty")]
    EmptySchedule,

    #[error("incomplete settings coverage: missing {0:?}")]
    IncompleteSettings(Vec<usize>),

    #[error("only {0} usable block(s); at least two are needed")]
    InsufficientBlocks(usize),

    #[error("no events to analyze")]
    NoEvents,

    #[error("synchronization failed: {0}")]
    Sync(String),

    #[error("timestamp arithmetic out of range: {0}")]
    TimestampRange(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
