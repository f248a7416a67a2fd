use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum AnnotatorError {
    #[error(transparent)]
    Pipeline(#[from] pcg_pipeline::PipelineError),
    #[error(transparent)]
    Core(#[from] pcg_core::CoreError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("review state is inconsistent: {0}")]
    Corrupt(String),
    #[error("invalid server configuration: {0}")]
    Config(String),
}

pub type Result<T, E = AnnotatorError> = std::result::Result<T, E>;
