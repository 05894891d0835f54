use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] rkhm::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }

    /// 2 for validation failures, 3 for I/O, 4 for numerical preconditions.
    pub fn exit_code(&self) -> i32 {
        use rkhm::Error as E;
        match self {
            CliError::Validation(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Core(e) => match e {
                E::DimensionMismatch(_)
                | E::EmptyInput
                | E::NegativeEpsilon(_)
                | E::InvalidParameter(_)
                | E::AxisOutOfRange { .. }
                | E::InsufficientData(_)
                | E::SeriesTooShort { .. } => 2,
                E::NonFinite
                | E::NonHermitianInput { .. }
                | E::NotStrictlyUpper { .. }
                | E::AllZeroGram
                | E::SingularEigvecMatrix { .. }
                | E::Backend(_) => 4,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
