//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed ESRI ASCII grid; `line` is 1-based within the offending file.
    #[error("{origin}:{line}: {msg}")]
    AsciiGrid {
        origin: String,
        line: usize,
        msg: String,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid reclass table: {0}")]
    InvalidTable(String),

    /// Grids in a stack disagree on a header field; `index` is the position
    /// of the first offending grid (the first grid is the reference).
    #[error("grid {index} misaligned on {field}")]
    Misaligned { index: usize, field: &'static str },

    #[error("{0}")]
    InvalidInput(String),

    #[error("sampling: {0}")]
    Sampling(String),

    #[error("training: {0}")]
    Training(String),

    #[error("model: {0}")]
    Model(String),

    #[error("candidate {0}")]
    Candidate(String),

    #[error("cannot read config {path}: {source}")]
    ConfigRead {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config error at {location}: {msg}")]
    Config { location: String, msg: String },

    /// Wraps a failure with the pipeline iteration and stage it occurred in.
    #[error("iteration {iteration} [{stage}]: {source}")]
    Pipeline {
        iteration: usize,
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("render: {0}")]
    Render(String),
}

impl Error {
    /// Attach pipeline stage context to an error.
    pub(crate) fn in_stage(self, iteration: usize, stage: &str) -> Error {
        Error::Pipeline {
            iteration,
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}
