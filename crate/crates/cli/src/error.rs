use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Format(String),

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] bren::Error),
}

impl CliError {
    /// 2 for I/O and decoding, 3 for invalid parameters, 4 for mismatched
    /// image dimensions.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Format(_) => 2,
            CliError::Usage(_) => 3,
            CliError::Core(bren::Error::DimensionMismatch { .. }) => 4,
            CliError::Core(_) => 3,
        }
    }
}
