use std::path::PathBuf;

use pcg_core::{ClassLabel, CoreError};
use pcg_nn::NnError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("illegal relabel of {segment_id}: {from} -> {to} ({rule})")]
    IllegalRelabel {
        segment_id: String,
        from: ClassLabel,
        to: ClassLabel,
        rule: &'static str,
    },
    #[error("relabel entry for {segment_id} says {claimed} but the original label is {actual}")]
    RelabelSourceMismatch {
        segment_id: String,
        claimed: ClassLabel,
        actual: ClassLabel,
    },
    #[error("unknown segment {0}")]
    UnknownSegment(String),
    #[error("segment {0} from outside the training split reached a training batch")]
    Leakage(String),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;

impl PipelineError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}
