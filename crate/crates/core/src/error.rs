use std::path::PathBuf;

/// Errors produced by the selection pipeline.
///
/// Variants split into two classes that callers (notably the CLI) map to
/// exit codes: input/validation problems and runtime/numeric failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}:{line}: unknown {column} code {value:?}")]
    UnknownCode {
        path: PathBuf,
        line: u64,
        column: String,
        value: String,
    },

    #[error("paper without authors: {0}")]
    PaperWithoutAuthors(String),

    #[error("duplicate paper id: {0}")]
    DuplicatePaperId(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("degenerate batch: {0}")]
    DegenerateBatch(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("training aborted: {0}")]
    TrainingAborted(String),

    #[error("undefined relative gain: {0}")]
    UndefinedGain(String),
}

impl Error {
    /// True for errors caused by bad inputs (files, configs, preconditions),
    /// as opposed to runtime or numeric failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Malformed { .. }
                | Error::UnknownCode { .. }
                | Error::PaperWithoutAuthors(_)
                | Error::DuplicatePaperId(_)
                | Error::Invalid(_)
                | Error::SchemaMismatch(_)
                | Error::LengthMismatch(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
