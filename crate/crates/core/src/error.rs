use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid action for {space}: {reason}")]
    InvalidAction { space: String, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("action space too large to enumerate ({count} actions, limit {limit})")]
    EnumerationTooLarge { count: u128, limit: u128 },

    #[error("step called on a finished episode")]
    EpisodeFinished,

    #[error("parameters diverged: {0}")]
    Diverged(String),
}

pub type Result<T> = std::result::Result<T, Error>;
