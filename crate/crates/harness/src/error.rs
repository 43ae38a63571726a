use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Solver(#[from] rbbtr::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid run matrix: {0}")]
    Matrix(String),

    #[error("invalid variant label `{0}`")]
    Variant(String),

    #[error("performance profile: {0}")]
    Profile(String),

    #[error("t = {t} exceeds the desk limit of {limit}; pass the override to run it anyway")]
    DeskGuard { t: usize, limit: usize },
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
    let path = path.into();
    move |source| HarnessError::Io { path, source }
}
