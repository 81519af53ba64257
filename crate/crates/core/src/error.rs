use std::path::PathBuf;

use thiserror::Error;

/// Errors produced across the toolkit.
///
/// Variants fall into three families that the command line maps onto exit
/// codes: invalid data or arguments, inputs that are missing, and plain I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("no evaluable classes")]
    NoEvaluableClasses,

    #[error("tracking ids required")]
    TrackIdsRequired,

    #[error("wrong sensor kind: expected {expected}, got {got}")]
    WrongSensorKind {
        expected: &'static str,
        got: &'static str,
    },

    #[error("{0} is not a ladder value")]
    NotInLadder(u32),

    #[error("singular camera intrinsics")]
    SingularIntrinsics,

    #[error("missing input for setup {setup}: {what}")]
    MissingSetupInput { setup: String, what: String },

    #[error("missing input: {0}")]
    Missing(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error: 2 validation, 3 missing input, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MissingSetupInput { .. } | Error::Missing(_) => 3,
            Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => 3,
            Error::Io { .. } | Error::Image(_) => 4,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
