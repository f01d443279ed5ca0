use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    /// Invalid configuration; `path` is the dotted field path (`.` for the root).
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Solver(#[from] pigd_core::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{}: {message}", path.display())]
    Data { path: PathBuf, message: String },

    #[error("{failed} of {total} sweep runs failed")]
    SweepFailed { failed: usize, total: usize },
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn config_err(path: impl Into<String>, message: impl Into<String>) -> LabError {
    LabError::Config {
        path: path.into(),
        message: message.into(),
    }
}

pub(crate) fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> LabError {
    let context = context.into();
    move |source| LabError::Io { context, source }
}
