//! Wavelet scattering transform up to second order with Morlet wavelets.
//!
//! Filters are defined in the frequency domain on a padded FFT grid.
//! Frequencies are in cycles per sample. The signal is reflect-padded to a
//! power of two, filtered by circular convolution, and every output path is
//! averaged by the Gaussian low-pass `phi` and subsampled by `2^J`.

use rustfft::num_complex::Complex64;

use super::fft::FftPair;
use super::mfcc::LOG_FLOOR;
use super::{FeatureKind, FeatureMap, FeatureParams};
use crate::error::{CoreError, Result};

/// Bandwidth of the low-pass at scale 1; `phi` at scale `J` uses
/// `PHI_SIGMA0 / 2^J`.
const PHI_SIGMA0: f64 = 0.1;
/// Half-power point between neighbouring wavelets.
const OVERLAP_RATIO: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// One analytic Morlet wavelet sampled on the padded frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavelet {
    /// Center frequency in cycles per sample.
    pub xi: f64,
    /// Gaussian bandwidth in cycles per sample.
    pub sigma: f64,
    /// Dyadic octave index; 0 is the highest octave.
    pub octave: u32,
    /// Real frequency response, one value per FFT bin.
    pub response: Vec<f64>,
}

/// Low-pass and first/second-order wavelet filters for one padded length.
#[derive(Debug, Clone, PartialEq)]
pub struct MorletFilterbank {
    pub j: u32,
    pub q: u32,
    /// FFT length after padding.
    pub padded_len: usize,
    pub phi: Vec<f64>,
    pub first: Vec<Wavelet>,
    pub second: Vec<Wavelet>,
}

/// Row identity of a scattering output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScatteringPath {
    Zeroth,
    First(usize),
    Second(usize, usize),
}

impl ScatteringPath {
    pub fn order(&self) -> u32 {
        match self {
            ScatteringPath::Zeroth => 0,
            ScatteringPath::First(_) => 1,
            ScatteringPath::Second(..) => 2,
        }
    }
}

fn grid_frequency(k: usize, n: usize) -> f64 {
    if k < n.div_ceil(2) {
        k as f64 / n as f64
    } else {
        k as f64 / n as f64 - 1.0
    }
}

fn gaussian(omega: f64, sigma: f64) -> f64 {
    (-(omega * omega) / (2.0 * sigma * sigma)).exp()
}

/// Highest first-order center frequency for `q` wavelets per octave.
fn xi_max(q: u32) -> f64 {
    (1.0 / (1.0 + 2f64.powf(3.0 / q as f64))).max(0.35)
}

/// Bandwidth that makes consecutive wavelets of a `q`-per-octave bank cross
/// at the overlap ratio.
fn sigma_for(xi: f64, q: u32) -> f64 {
    let factor = 2f64.powf(-1.0 / q as f64);
    let term1 = (1.0 - factor) / (1.0 + factor);
    let term2 = 1.0 / (2.0 * (1.0 / OVERLAP_RATIO).ln()).sqrt();
    xi * term1 * term2
}

/// Zero-mean Morlet: a Gaussian bump at `xi` minus a scaled Gaussian at 0
/// so the response vanishes at DC.
fn morlet_response(xi: f64, sigma: f64, n: usize) -> Vec<f64> {
    let kappa = gaussian(xi, sigma);
    (0..n)
        .map(|k| {
            let w = grid_frequency(k, n);
            gaussian(w - xi, sigma) - kappa * gaussian(w, sigma)
        })
        .collect()
}

/// Scale wavelets so that `|phi|^2 + 1/2 sum(|psi(w)|^2 + |psi(-w)|^2) <= 1`
/// at every bin, which keeps each layer non-expansive on real signals.
fn normalize_bank(bank: &mut [Wavelet], phi: &[f64]) {
    let n = phi.len();
    let mut energy = vec![0.0; n];
    for w in bank.iter() {
        for k in 0..n {
            let mirror = (n - k) % n;
            energy[k] += 0.5 * (w.response[k].powi(2) + w.response[mirror].powi(2));
        }
    }
    let scale_sq = energy
        .iter()
        .zip(phi)
        .filter(|(e, _)| **e > 1e-300)
        .map(|(e, p)| (1.0 - p * p).max(0.0) / e)
        .fold(f64::INFINITY, f64::min);
    let scale = scale_sq.sqrt();
    for w in bank.iter_mut() {
        for v in w.response.iter_mut() {
            *v *= scale;
        }
    }
}

fn bank(j: u32, per_octave: u32, n: usize) -> Vec<Wavelet> {
    let top = xi_max(per_octave);
    (0..j * per_octave)
        .map(|k| {
            let xi = top * 2f64.powf(-(k as f64) / per_octave as f64);
            let sigma = sigma_for(xi, per_octave);
            Wavelet {
                xi,
                sigma,
                octave: k / per_octave,
                response: morlet_response(xi, sigma, n),
            }
        })
        .collect()
}

/// Padded FFT length for a signal of `len` samples at scale `j`.
fn padded_length(len: usize, j: u32) -> usize {
    (len + 2 * 8 * (1usize << j)).next_power_of_two()
}

/// Build the Morlet filterbank for signals of `len` samples: `J * Q`
/// first-order wavelets, `J` second-order wavelets (one per octave) and the
/// Gaussian low-pass at scale `2^J` with unit DC gain.
pub fn morlet_filterbank(j: u32, q: u32, len: usize) -> Result<MorletFilterbank> {
    if q == 0 {
        return Err(CoreError::InvalidParameter("Q must be positive".into()));
    }
    if j >= usize::BITS - 1 || (1usize << j) > len {
        return Err(CoreError::InputTooShort {
            len,
            frame: 1usize.checked_shl(j).unwrap_or(usize::MAX),
        });
    }
    let n = padded_length(len, j);
    let sigma_phi = PHI_SIGMA0 / (1u64 << j) as f64;
    let phi: Vec<f64> = (0..n).map(|k| gaussian(grid_frequency(k, n), sigma_phi)).collect();
    let mut first = bank(j, q, n);
    let mut second = bank(j, 1, n);
    normalize_bank(&mut first, &phi);
    normalize_bank(&mut second, &phi);
    Ok(MorletFilterbank {
        j,
        q,
        padded_len: n,
        phi,
        first,
        second,
    })
}

/// A prepared scattering transform for signals of one length.
#[derive(Debug, Clone)]
pub struct ScatteringNetwork {
    len: usize,
    pad_left: usize,
    order: u32,
    log: bool,
    filters: MorletFilterbank,
    paths: Vec<ScatteringPath>,
    fft: FftPair,
    decimated_fft: FftPair,
    params_hash: u64,
}

impl ScatteringNetwork {
    pub fn new(params: &FeatureParams, len: usize) -> Result<Self> {
        if params.wst_order > 2 {
            return Err(CoreError::InvalidParameter("scattering order above 2".into()));
        }
        let filters = morlet_filterbank(params.wst_j, params.wst_q, len)?;
        let step = 1usize << params.wst_j;
        let n = filters.padded_len;
        let pad_left = ((n - len) / 2) / step * step;

        let mut paths = vec![ScatteringPath::Zeroth];
        if params.wst_order >= 1 {
            paths.extend((0..filters.first.len()).map(ScatteringPath::First));
        }
        if params.wst_order >= 2 {
            for (a, w1) in filters.first.iter().enumerate() {
                for (b, w2) in filters.second.iter().enumerate() {
                    if w2.octave > w1.octave {
                        paths.push(ScatteringPath::Second(a, b));
                    }
                }
            }
        }

        Ok(Self {
            len,
            pad_left,
            order: params.wst_order,
            log: params.wst_log,
            fft: FftPair::new(n),
            decimated_fft: FftPair::new(n / step),
            filters,
            paths,
            params_hash: params.hash_for(FeatureKind::Wst),
        })
    }

    pub fn filters(&self) -> &MorletFilterbank {
        &self.filters
    }

    pub fn paths(&self) -> &[ScatteringPath] {
        &self.paths
    }

    pub fn signal_len(&self) -> usize {
        self.len
    }

    /// Output columns after subsampling by `2^J`.
    pub fn frames(&self) -> usize {
        self.len >> self.filters.j
    }

    /// Scattering coefficients subsampled by `2^J`, log-compressed when
    /// configured.
    pub fn transform(&self, x: &[f64]) -> Result<FeatureMap> {
        let mut map = self.scatter(x, 1usize << self.filters.j)?;
        if self.log {
            for v in map.data.iter_mut() {
                *v = v.max(LOG_FLOOR).ln();
            }
        }
        Ok(map)
    }

    /// Raw coefficients at full time resolution, one column per input sample.
    pub fn transform_full(&self, x: &[f64]) -> Result<FeatureMap> {
        self.scatter(x, 1)
    }

    fn pad(&self, x: &[f64]) -> Vec<Complex64> {
        let n = self.filters.padded_len;
        let len = x.len();
        let period = 2 * (len - 1).max(1);
        (0..n)
            .map(|i| {
                let v = if len == 1 {
                    x[0]
                } else {
                    let m = (i as i64 - self.pad_left as i64).rem_euclid(period as i64) as usize;
                    x[if m < len { m } else { period - m }]
                };
                Complex64::new(v, 0.0)
            })
            .collect()
    }

    /// Apply `phi` to a spectrum, then decimate by `step` and crop to the
    /// original support.
    fn average(&self, spectrum: &[Complex64], step: usize, out: &mut [f64]) {
        let n = self.filters.padded_len;
        let phi = &self.filters.phi;
        if step == 1 {
            let mut buf: Vec<Complex64> = spectrum.iter().zip(phi).map(|(s, p)| s * p).collect();
            self.fft.inverse_normalized(&mut buf);
            for (o, v) in out.iter_mut().zip(&buf[self.pad_left..]) {
                *o = v.re;
            }
            return;
        }
        // Sampling every `step`-th output equals an inverse FFT of the
        // spectrum folded onto n / step bins.
        let m = n / step;
        let mut folded = vec![Complex64::new(0.0, 0.0); m];
        for (k, (s, p)) in spectrum.iter().zip(phi).enumerate() {
            folded[k % m] += s * p;
        }
        self.decimated_fft.inverse.process(&mut folded);
        let first = self.pad_left / step;
        let scale = 1.0 / n as f64;
        for (o, v) in out.iter_mut().zip(&folded[first..]) {
            *o = v.re * scale;
        }
    }

    /// `|IFFT(spectrum * filter)|`, then its spectrum.
    fn modulus_spectrum(&self, spectrum: &[Complex64], filter: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = spectrum.iter().zip(filter).map(|(s, f)| s * f).collect();
        self.fft.inverse_normalized(&mut buf);
        for v in buf.iter_mut() {
            *v = Complex64::new(v.norm(), 0.0);
        }
        self.fft.forward.process(&mut buf);
        buf
    }

    fn scatter(&self, x: &[f64], step: usize) -> Result<FeatureMap> {
        if x.len() != self.len {
            return Err(CoreError::InvalidParameter(format!(
                "scattering network built for {} samples, got {}",
                self.len,
                x.len()
            )));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite(i));
        }
        let cols = self.len / step;
        let mut map = FeatureMap::zeros(FeatureKind::Wst, self.paths.len(), cols, self.params_hash);

        let mut spectrum = self.pad(x);
        self.fft.forward.process(&mut spectrum);
        self.average(&spectrum, step, map.row_mut(0));
        if self.order == 0 {
            return Ok(map);
        }

        let n_first = self.filters.first.len();
        let mut row = 1 + n_first;
        for (a, w1) in self.filters.first.iter().enumerate() {
            let u1 = self.modulus_spectrum(&spectrum, &w1.response);
            self.average(&u1, step, map.row_mut(1 + a));
            if self.order < 2 {
                continue;
            }
            for w2 in self.filters.second.iter().filter(|w2| w2.octave > w1.octave) {
                let u2 = self.modulus_spectrum(&u1, &w2.response);
                self.average(&u2, step, map.row_mut(row));
                row += 1;
            }
        }
        debug_assert_eq!(row, self.paths.len());
        Ok(map)
    }
}

/// Scattering transform of `x` with the given parameters.
pub fn wst(x: &[f64], params: &FeatureParams) -> Result<FeatureMap> {
    ScatteringNetwork::new(params, x.len())?.transform(x)
}
