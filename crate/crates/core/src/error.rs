//! Error type shared by every module in this crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Matrix or vector dimensions do not fit the operation.
    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    ShapeMismatch {
        context: String,
        expected: String,
        found: String,
    },

    /// A NaN or infinite value reached a public operation.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// An argument is out of its documented range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A pipeline stage failed; the stage name is kept for diagnostics.
    /// The cause is part of the message (not a `source()` link) so the
    /// chain is never printed twice.
    #[error("stage {stage} failed: {cause}")]
    Stage {
        stage: &'static str,
        cause: Box<Error>,
    },

    #[error("io error on {path}: {cause}")]
    Io { path: String, cause: std::io::Error },

    /// A text file did not parse; `line` is 1-based.
    #[error("parse error in {path} line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn shape(
        context: impl Into<String>,
        expected: impl Into<String>,
        found: impl Into<String>,
    ) -> Self {
        Error::ShapeMismatch {
            context: context.into(),
            expected: expected.into(),
            found: found.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, cause: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            cause,
        }
    }

    /// `line` is 1-based; 0 means the whole file.
    pub fn parse(
        path: impl AsRef<std::path::Path>,
        line: usize,
        message: impl Into<String>,
    ) -> Self {
        Error::Parse {
            path: path.as_ref().display().to_string(),
            line,
            message: message.into(),
        }
    }

    /// Wraps an error with the name of the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            cause: Box::new(self),
        }
    }
}
