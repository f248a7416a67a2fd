use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CoreError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unreadable wav file {path}: {reason}")]
    Wav { path: PathBuf, reason: String },
    #[error("sample rate mismatch for {path}: header says {header} Hz, metadata says {expected} Hz")]
    SampleRateMismatch {
        path: PathBuf,
        header: u32,
        expected: u32,
    },
    #[error("no label row for recording {0}")]
    MissingLabel(String),
    #[error("unknown class label {0:?}")]
    UnknownLabel(String),
    #[error("unknown auscultation location {0:?}")]
    UnknownLocation(String),
    #[error("label {label} is not valid for {context}")]
    LabelTaskMismatch { label: String, context: String },
    #[error("cutoff {cutoff_hz} Hz must be below the Nyquist frequency {nyquist_hz} Hz")]
    CutoffAboveNyquist { cutoff_hz: f64, nyquist_hz: f64 },
    #[error("filter order must be at least 1")]
    InvalidOrder,
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("segment has near-zero variance (sigma = {sigma:e}); routed to noise-only review")]
    ZeroVariance { sigma: f64 },
    #[error("window length {0} is too short, need at least 2")]
    WindowTooShort(usize),
    #[error("input of {len} samples is shorter than one frame of {frame}")]
    InputTooShort { len: usize, frame: usize },
    #[error("{n_mels} mel filters collapse onto the same FFT bin at nfft = {nfft}")]
    MelBinCollapse { n_mels: usize, nfft: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("bad file format in {path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("length mismatch: {left} predictions vs {right} truths")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
}

impl CoreError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CoreError::Io {
            path: path.into(),
            source,
        }
    }
}
