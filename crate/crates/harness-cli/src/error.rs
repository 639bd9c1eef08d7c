use thiserror::Error;

/// Errors that abort a command before it can produce a report.
///
/// Everything here maps to process status 2 (a configuration or setup
/// problem). Verification failures and diverged runs are *outcomes*, not
/// errors — they are reported in-band and map to status 1.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {reason}")]
    Config { reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Env(#[from] env_suite::EnvError),

    #[error(transparent)]
    Oracle(#[from] exact_oracle::OracleError),

    #[error(transparent)]
    Train(#[from] agent_trainer::TrainError),

    #[error(transparent)]
    Model(#[from] pomdp_core::Error),
}

impl HarnessError {
    pub fn config(reason: impl Into<String>) -> Self {
        HarnessError::Config { reason: reason.into() }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.as_ref().display().to_string(), source }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
