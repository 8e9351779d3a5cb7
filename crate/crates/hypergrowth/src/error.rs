//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A CSV row that could not be interpreted. `line` is 1-based and counts
    /// the header.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Input that is well-formed but violates a precondition.
    #[error("{0}")]
    Validation(String),

    /// Too few usable points for the requested operation.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// The least-squares design matrix has no unique solution.
    #[error("singular design: {0}")]
    SingularDesign(String),

    /// A fit whose slope does not produce a finite-time singularity.
    #[error("no finite-time singularity: k = {k:e} is not positive")]
    NoSingularity { k: f64 },

    /// Model evaluation too close to the pole to be meaningful.
    #[error("model evaluation inside the pole guard band at t = {t}")]
    PoleEvaluation { t: f64 },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Wraps a failure with the pipeline stage it occurred in.
    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn stage(stage: &'static str, source: Error) -> Self {
        Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    /// Process exit code for the CLI: 2 for bad input, 3 for i/o, 4 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Validation(_) | Error::InsufficientData(_) => 2,
            Error::Io { .. } => 3,
            Error::SingularDesign(_)
            | Error::NoSingularity { .. }
            | Error::PoleEvaluation { .. } => 4,
            Error::Stage { source, .. } => source.exit_code(),
        }
    }
}
