use rustfft::num_complex::Complex64;

use super::fft::FftPair;
use super::window::hamming_window;
use super::{FeatureKind, FeatureMap, FeatureParams};
use crate::error::{CoreError, Result};

/// One-sided magnitude STFT with a Hamming window.
#[derive(Debug, Clone)]
pub struct Stft {
    nfft: usize,
    hop: usize,
    window: Vec<f64>,
    fft: FftPair,
    params_hash: u64,
}

impl Stft {
    pub fn new(params: &FeatureParams) -> Result<Self> {
        if params.hop == 0 {
            return Err(CoreError::InvalidParameter("hop must be positive".into()));
        }
        Ok(Self {
            nfft: params.nfft,
            hop: params.hop,
            window: hamming_window(params.nfft)?,
            fft: FftPair::new(params.nfft),
            params_hash: params.hash_for(FeatureKind::Stft),
        })
    }

    pub fn frames(&self, len: usize) -> usize {
        if len < self.nfft {
            0
        } else {
            1 + (len - self.nfft) / self.hop
        }
    }

    pub fn nfft(&self) -> usize {
        self.nfft
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn bins(&self) -> usize {
        self.nfft / 2 + 1
    }

    /// Windowed spectrum of the frame starting at `start`.
    pub(crate) fn frame_spectrum(&self, x: &[f64], start: usize, buf: &mut Vec<Complex64>) {
        buf.clear();
        buf.extend(
            x[start..start + self.nfft]
                .iter()
                .zip(&self.window)
                .map(|(v, w)| Complex64::new(v * w, 0.0)),
        );
        self.fft.forward.process(buf);
    }

    pub fn transform(&self, x: &[f64]) -> Result<FeatureMap> {
        let frames = self.frames(x.len());
        if frames == 0 {
            return Err(CoreError::InputTooShort {
                len: x.len(),
                frame: self.nfft,
            });
        }
        let bins = self.bins();
        let mut map = FeatureMap::zeros(FeatureKind::Stft, bins, frames, self.params_hash);
        let mut buf = Vec::with_capacity(self.nfft);
        for t in 0..frames {
            self.frame_spectrum(x, t * self.hop, &mut buf);
            for (k, c) in buf.iter().take(bins).enumerate() {
                map.data[k * frames + t] = c.norm();
            }
        }
        Ok(map)
    }
}

pub fn stft(x: &[f64], params: &FeatureParams) -> Result<FeatureMap> {
    Stft::new(params)?.transform(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Direct O(n^2) DFT magnitude of one Hamming-windowed frame.
    fn dft_magnitude(frame: &[f64]) -> Vec<f64> {
        let n = frame.len();
        let w: Vec<f64> = (0..n)
            .map(|k| 0.54 - 0.46 * (2.0 * PI * k as f64 / (n - 1) as f64).cos())
            .collect();
        (0..=n / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (i, v) in frame.iter().enumerate() {
                    let ang = -2.0 * PI * (k * i) as f64 / n as f64;
                    re += v * w[i] * ang.cos();
                    im += v * w[i] * ang.sin();
                }
                (re * re + im * im).sqrt()
            })
            .collect()
    }

    #[test]
    fn zero_signal_gives_zero_map() {
        let map = stft(&[0.0; 1000], &FeatureParams::default()).unwrap();
        assert!(map.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sine_peaks_at_expected_bin_and_matches_dft() {
        let fs = 4000.0;
        let x: Vec<f64> = (0..2000).map(|i| (2.0 * PI * 500.0 * i as f64 / fs).sin()).collect();
        let map = stft(&x, &FeatureParams::default()).unwrap();
        for t in 0..map.cols {
            let col = map.column(t);
            let argmax = col
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert_eq!(argmax, 16);
        }
        let oracle = dft_magnitude(&x[48..48 + 128]);
        for (k, v) in oracle.iter().enumerate() {
            assert!((map.get(k, 3) - v).abs() < 1e-9);
        }
    }

    #[test]
    fn shape_for_four_second_segment() {
        let map = stft(&vec![0.5; 16_000], &FeatureParams::default()).unwrap();
        assert_eq!((map.rows, map.cols), (65, 993));
    }

    #[test]
    fn shift_by_hop_shifts_one_frame_exactly() {
        let x: Vec<f64> = (0..3000).map(|i| ((i as f64) * 0.37).sin() + ((i * 7 % 13) as f64) * 0.01).collect();
        let p = FeatureParams::default();
        let a = stft(&x[p.hop..], &p).unwrap();
        let b = stft(&x, &p).unwrap();
        for r in 0..a.rows {
            for t in 0..a.cols {
                assert_eq!(a.get(r, t).to_bits(), b.get(r, t + 1).to_bits());
            }
        }
    }

    #[test]
    fn too_short_input() {
        assert!(matches!(
            stft(&[0.0; 100], &FeatureParams::default()),
            Err(CoreError::InputTooShort { len: 100, frame: 128 })
        ));
    }
}
