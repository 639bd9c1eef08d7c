use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    /// `backward` was asked to differentiate a node that is not a scalar.
    #[error("backward requires a scalar output, got a vector of length {len}")]
    NonScalarOutput { len: usize },

    #[error("checkpoint is not in the expected format: {reason}")]
    MalformedCheckpoint { reason: String },

    /// Loaded data disagrees with the live containers it should fill.
    #[error("checkpoint mismatch for `{name}`: {reason}")]
    CheckpointMismatch { name: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NnError>;
