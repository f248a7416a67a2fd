//! One-dimensional segment to two-dimensional time-frequency maps.

mod fft;
mod mel;
mod mfcc;
mod scattering;
mod stft;
mod window;

pub use fft::FftPair;
pub use mel::{hz_to_mel, mel_filterbank, mel_to_hz, MelFilterbank};
pub use mfcc::{dct_ii_orthonormal, mfcc, pre_emphasis, Mfcc, LOG_FLOOR};
pub use scattering::{morlet_filterbank, wst, ScatteringNetwork, ScatteringPath, Wavelet};
pub use stft::{stft, Stft};
pub use window::hamming_window;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Stft,
    Mfcc,
    Wst,
}

impl FeatureKind {
    pub fn code(self) -> u8 {
        match self {
            FeatureKind::Stft => 1,
            FeatureKind::Mfcc => 2,
            FeatureKind::Wst => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(FeatureKind::Stft),
            2 => Some(FeatureKind::Mfcc),
            3 => Some(FeatureKind::Wst),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Stft => "stft",
            FeatureKind::Mfcc => "mfcc",
            FeatureKind::Wst => "wst",
        }
    }
}

impl std::str::FromStr for FeatureKind {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "stft" => Ok(FeatureKind::Stft),
            "mfcc" => Ok(FeatureKind::Mfcc),
            "wst" => Ok(FeatureKind::Wst),
            other => Err(CoreError::InvalidParameter(format!("unknown feature kind {other:?}"))),
        }
    }
}

/// Parameters shared by the three extractors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureParams {
    /// Frame length of the STFT and MFCC analysis.
    pub nfft: usize,
    /// Frame advance in samples.
    pub hop: usize,
    /// Cepstral coefficients kept.
    pub n_mfcc: usize,
    /// Triangular mel filters.
    pub n_mels: usize,
    pub pre_emphasis_alpha: f64,
    /// Averaging scale is `2^wst_j` samples.
    pub wst_j: u32,
    /// First-order wavelets per octave.
    pub wst_q: u32,
    /// Highest scattering order, 0 to 2.
    pub wst_order: u32,
    /// Log-compress scattering coefficients with the [`LOG_FLOOR`] floor.
    pub wst_log: bool,
}

impl Default for FeatureParams {
    fn default() -> Self {
        Self {
            nfft: 128,
            hop: 16,
            n_mfcc: 10,
            n_mels: 26,
            pre_emphasis_alpha: 0.97,
            wst_j: 4,
            wst_q: 2,
            wst_order: 2,
            wst_log: true,
        }
    }
}

impl FeatureParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CoreError::InvalidParameter(m.to_string()));
        if self.nfft < 2 {
            return bad("nfft must be at least 2");
        }
        if self.hop == 0 {
            return bad("hop must be positive");
        }
        if self.n_mfcc == 0 || self.n_mfcc > self.n_mels {
            return bad("n_mfcc must be in 1..=n_mels");
        }
        if !(0.0..1.0).contains(&self.pre_emphasis_alpha) {
            return bad("pre-emphasis alpha must be in [0, 1)");
        }
        if self.wst_q == 0 {
            return bad("wst_q must be positive");
        }
        if self.wst_order > 2 {
            return bad("scattering order above 2 is not supported");
        }
        Ok(())
    }

    /// Stable 64-bit FNV-1a hash of the parameters relevant to `kind`.
    pub fn hash_for(&self, kind: FeatureKind) -> u64 {
        let text = match kind {
            FeatureKind::Stft => format!("stft:{}:{}", self.nfft, self.hop),
            FeatureKind::Mfcc => format!(
                "mfcc:{}:{}:{}:{}:{:?}",
                self.nfft, self.hop, self.n_mfcc, self.n_mels, self.pre_emphasis_alpha
            ),
            FeatureKind::Wst => format!(
                "wst:{}:{}:{}:{}",
                self.wst_j, self.wst_q, self.wst_order, self.wst_log
            ),
        };
        fnv1a(text.as_bytes())
    }
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// A 2-D feature map stored row-major: rows are frequency bins, cepstral
/// coefficients or scattering paths; columns are time frames.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub kind: FeatureKind,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
    pub params_hash: u64,
}

impl FeatureMap {
    pub fn zeros(kind: FeatureKind, rows: usize, cols: usize, params_hash: u64) -> Self {
        Self {
            kind,
            rows,
            cols,
            data: vec![0.0; rows * cols],
            params_hash,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        &mut self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn squared_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

/// A prepared extractor for one feature kind, segment length and sample
/// rate. Filterbanks and FFT plans are built once and reused.
#[derive(Debug, Clone)]
pub enum Extractor {
    Stft(Stft),
    Mfcc(Mfcc),
    Wst(ScatteringNetwork),
}

impl Extractor {
    pub fn new(kind: FeatureKind, params: &FeatureParams, len: usize, sample_rate_hz: f64) -> Result<Self> {
        params.validate()?;
        Ok(match kind {
            FeatureKind::Stft => Extractor::Stft(Stft::new(params)?),
            FeatureKind::Mfcc => Extractor::Mfcc(Mfcc::new(params, sample_rate_hz)?),
            FeatureKind::Wst => Extractor::Wst(ScatteringNetwork::new(params, len)?),
        })
    }

    pub fn kind(&self) -> FeatureKind {
        match self {
            Extractor::Stft(_) => FeatureKind::Stft,
            Extractor::Mfcc(_) => FeatureKind::Mfcc,
            Extractor::Wst(_) => FeatureKind::Wst,
        }
    }

    pub fn extract(&self, x: &[f64]) -> Result<FeatureMap> {
        match self {
            Extractor::Stft(s) => s.transform(x),
            Extractor::Mfcc(m) => m.transform(x),
            Extractor::Wst(w) => w.transform(x),
        }
    }
}
