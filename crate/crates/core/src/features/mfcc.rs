use std::f64::consts::PI;

use super::mel::{mel_filterbank, MelFilterbank};
use super::stft::Stft;
use super::{FeatureKind, FeatureMap, FeatureParams};
use crate::error::{CoreError, Result};

/// Floor applied before taking logarithms of energies.
pub const LOG_FLOOR: f64 = 1e-10;

/// `y[n] = x[n] - alpha x[n-1]` with `y[0] = x[0]`.
pub fn pre_emphasis(x: &[f64], alpha: f64) -> Vec<f64> {
    let mut y = Vec::with_capacity(x.len());
    if let Some(&first) = x.first() {
        y.push(first);
    }
    y.extend(x.windows(2).map(|w| w[1] - alpha * w[0]));
    y
}

/// Orthonormal DCT-II basis, `n_out x n_in`, row-major.
pub fn dct_ii_orthonormal(n_in: usize, n_out: usize) -> Vec<f64> {
    let mut basis = Vec::with_capacity(n_in * n_out);
    for k in 0..n_out {
        let scale = if k == 0 {
            (1.0 / n_in as f64).sqrt()
        } else {
            (2.0 / n_in as f64).sqrt()
        };
        basis.extend((0..n_in).map(|m| scale * (PI * k as f64 * (m as f64 + 0.5) / n_in as f64).cos()));
    }
    basis
}

/// Pre-emphasis, Hamming-windowed power spectra, mel energies, log, DCT.
#[derive(Debug, Clone)]
pub struct Mfcc {
    alpha: f64,
    n_mfcc: usize,
    stft: Stft,
    filterbank: MelFilterbank,
    dct: Vec<f64>,
    params_hash: u64,
}

impl Mfcc {
    pub fn new(params: &FeatureParams, sample_rate_hz: f64) -> Result<Self> {
        if params.n_mfcc == 0 || params.n_mfcc > params.n_mels {
            return Err(CoreError::InvalidParameter("n_mfcc must be in 1..=n_mels".into()));
        }
        Ok(Self {
            alpha: params.pre_emphasis_alpha,
            n_mfcc: params.n_mfcc,
            stft: Stft::new(params)?,
            filterbank: mel_filterbank(params.n_mels, params.nfft, sample_rate_hz)?,
            dct: dct_ii_orthonormal(params.n_mels, params.n_mfcc),
            params_hash: params.hash_for(FeatureKind::Mfcc),
        })
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    pub fn transform(&self, x: &[f64]) -> Result<FeatureMap> {
        let frames = self.stft.frames(x.len());
        if frames == 0 {
            return Err(CoreError::InputTooShort {
                len: x.len(),
                frame: self.stft.nfft(),
            });
        }
        let y = pre_emphasis(x, self.alpha);
        let n_mels = self.filterbank.n_mels;
        let bins = self.stft.bins();

        let mut map = FeatureMap::zeros(FeatureKind::Mfcc, self.n_mfcc, frames, self.params_hash);
        let mut spectrum = Vec::new();
        let mut power = vec![0.0; bins];
        let mut log_energy = vec![0.0; n_mels];
        for t in 0..frames {
            self.stft.frame_spectrum(&y, t * self.stft.hop(), &mut spectrum);
            for (p, c) in power.iter_mut().zip(&spectrum) {
                *p = c.norm_sqr();
            }
            self.filterbank.apply(&power, &mut log_energy);
            for e in log_energy.iter_mut() {
                *e = e.max(LOG_FLOOR).ln();
            }
            for k in 0..self.n_mfcc {
                let basis = &self.dct[k * n_mels..(k + 1) * n_mels];
                map.data[k * frames + t] = basis.iter().zip(&log_energy).map(|(b, f)| b * f).sum();
            }
        }
        Ok(map)
    }
}

pub fn mfcc(x: &[f64], params: &FeatureParams, sample_rate_hz: f64) -> Result<FeatureMap> {
    Mfcc::new(params, sample_rate_hz)?.transform(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rustfft::num_complex::Complex64;
    use rustfft::FftPlanner;

    #[test]
    fn pre_emphasis_examples() {
        let y = pre_emphasis(&[1.0, 1.0, 1.0], 0.97);
        assert_eq!(y[0], 1.0);
        assert!((y[1] - 0.03).abs() < 1e-12 && (y[2] - 0.03).abs() < 1e-12);
        let x = [0.3, -2.0, 5.5];
        assert_eq!(pre_emphasis(&x, 0.0), x.to_vec());
        assert!(pre_emphasis(&[], 0.5).is_empty());
    }

    #[test]
    fn pre_emphasis_tilts_white_noise_upward() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 8192;
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y = pre_emphasis(&x, 0.97);
        let mut buf: Vec<Complex64> = y.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let quarter = n / 8;
        let low: f64 = buf[1..quarter].iter().map(|c| c.norm_sqr()).sum();
        let high: f64 = buf[3 * quarter..4 * quarter].iter().map(|c| c.norm_sqr()).sum();
        assert!(high / low > 1.0, "ratio {}", high / low);
    }

    #[test]
    fn orthonormal_dct_rows() {
        let d = dct_ii_orthonormal(26, 26);
        for a in 0..26 {
            for b in 0..26 {
                let dot: f64 = (0..26).map(|m| d[a * 26 + m] * d[b * 26 + m]).sum();
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_signal_only_has_constant_c0() {
        let map = mfcc(&[0.0; 4000], &FeatureParams::default(), 4000.0).unwrap();
        let c0 = (26.0f64).sqrt() * LOG_FLOOR.ln();
        for t in 0..map.cols {
            assert!((map.get(0, t) - c0).abs() < 1e-9);
            for k in 1..map.rows {
                assert!(map.get(k, t).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn default_shape() {
        let x: Vec<f64> = (0..16_000).map(|i| (i as f64 * 0.2).sin()).collect();
        let map = mfcc(&x, &FeatureParams::default(), 4000.0).unwrap();
        assert_eq!((map.rows, map.cols), (10, 993));
    }

    /// Independent MFCC written straight from the textbook definitions, with a
    /// direct DFT and the unnormalized cosine sum rescaled to orthonormal.
    fn reference_mfcc_frame(x: &[f64], start: usize, fs: f64) -> Vec<f64> {
        let (n, n_mels, n_mfcc, alpha) = (128usize, 26usize, 10usize, 0.97);
        let y: Vec<f64> = (0..x.len())
            .map(|i| if i == 0 { x[0] } else { x[i] - alpha * x[i - 1] })
            .collect();
        let frame: Vec<f64> = (0..n)
            .map(|i| y[start + i] * (0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos()))
            .collect();
        let power: Vec<f64> = (0..=n / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (i, v) in frame.iter().enumerate() {
                    let a = -2.0 * PI * (k * i) as f64 / n as f64;
                    re += v * a.cos();
                    im += v * a.sin();
                }
                re * re + im * im
            })
            .collect();
        let mel = |f: f64| 2595.0 * (1.0 + f / 700.0).log10();
        let inv = |m: f64| 700.0 * (10f64.powf(m / 2595.0) - 1.0);
        let pts: Vec<usize> = (0..n_mels + 2)
            .map(|i| ((n + 1) as f64 * inv(mel(fs / 2.0) * i as f64 / (n_mels + 1) as f64) / fs).floor() as usize)
            .collect();
        let logs: Vec<f64> = (1..=n_mels)
            .map(|m| {
                let mut e = 0.0;
                for (k, p) in power.iter().enumerate() {
                    let h = if k >= pts[m - 1] && k <= pts[m] {
                        (k - pts[m - 1]) as f64 / (pts[m] - pts[m - 1]) as f64
                    } else if k > pts[m] && k <= pts[m + 1] {
                        (pts[m + 1] - k) as f64 / (pts[m + 1] - pts[m]) as f64
                    } else {
                        0.0
                    };
                    e += p * h;
                }
                e.max(1e-10).ln()
            })
            .collect();
        (0..n_mfcc)
            .map(|c| {
                let raw: f64 = logs
                    .iter()
                    .enumerate()
                    .map(|(m, f)| f * (PI * c as f64 / n_mels as f64 * (m as f64 + 0.5)).cos())
                    .sum();
                let scale = if c == 0 { (1.0 / n_mels as f64).sqrt() } else { (2.0 / n_mels as f64).sqrt() };
                raw * scale
            })
            .collect()
    }

    #[test]
    fn matches_reference_and_discriminates_tones() {
        let fs = 4000.0;
        let tone = |f: f64| -> Vec<f64> {
            (0..2048).map(|i| (2.0 * PI * f * i as f64 / fs).sin()).collect()
        };
        let (a, b) = (tone(300.0), tone(900.0));
        let params = FeatureParams::default();
        let ma = mfcc(&a, &params, fs).unwrap();
        let mb = mfcc(&b, &params, fs).unwrap();
        for (x, m) in [(&a, &ma), (&b, &mb)] {
            for t in [0usize, 5, 40] {
                let reference = reference_mfcc_frame(x, t * 16, fs);
                for (k, r) in reference.iter().enumerate() {
                    assert!((m.get(k, t) - r).abs() < 1e-8, "frame {t} coef {k}");
                }
            }
        }
        let dist: f64 = ma
            .column(10)
            .iter()
            .zip(mb.column(10))
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt();
        assert!(dist > 0.0);
    }
}
