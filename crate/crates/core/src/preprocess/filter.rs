//! Digital Butterworth low-pass filtering.
//!
//! The analog prototype is mapped to the z-plane with the bilinear transform
//! after pre-warping the cutoff, then realized as cascaded second-order
//! sections (plus one first-order section for odd orders).

use std::f64::consts::PI;

use crate::error::{CoreError, Result};

/// One biquad in transposed direct form II. First-order sections keep
/// `b2 = a2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    /// Complex frequency response at normalized angular frequency `omega`
    /// (radians per sample), returned as (re, im).
    fn response(&self, omega: f64) -> (f64, f64) {
        let (c1, s1) = (omega.cos(), -omega.sin());
        let (c2, s2) = ((2.0 * omega).cos(), -(2.0 * omega).sin());
        let num = (self.b0 + self.b1 * c1 + self.b2 * c2, self.b1 * s1 + self.b2 * s2);
        let den = (1.0 + self.a1 * c1 + self.a2 * c2, self.a1 * s1 + self.a2 * s2);
        let d = den.0 * den.0 + den.1 * den.1;
        (
            (num.0 * den.0 + num.1 * den.1) / d,
            (num.1 * den.0 - num.0 * den.1) / d,
        )
    }
}

/// A designed low-pass filter as a cascade of sections.
#[derive(Debug, Clone, PartialEq)]
pub struct ButterworthLowpass {
    sections: Vec<Biquad>,
    order: usize,
    cutoff_hz: f64,
    sample_rate_hz: f64,
}

impl ButterworthLowpass {
    pub fn design(order: usize, cutoff_hz: f64, sample_rate_hz: f64) -> Result<Self> {
        if order == 0 {
            return Err(CoreError::InvalidOrder);
        }
        let nyquist_hz = sample_rate_hz / 2.0;
        if !(cutoff_hz > 0.0 && cutoff_hz < nyquist_hz) {
            return Err(CoreError::CutoffAboveNyquist {
                cutoff_hz,
                nyquist_hz,
            });
        }

        let k = 2.0 * sample_rate_hz;
        let warped = k * (PI * cutoff_hz / sample_rate_hz).tan();
        let mut sections = Vec::with_capacity(order.div_ceil(2));

        // Upper-half-plane poles of the prototype; each pairs with its conjugate.
        for i in 0..order / 2 {
            let theta = PI * (2 * i + 1 + order) as f64 / (2 * order) as f64;
            let (sr, si) = (warped * theta.cos(), warped * theta.sin());
            // z = (k + s) / (k - s)
            let (nr, ni) = (k + sr, si);
            let (dr, di) = (k - sr, -si);
            let dd = dr * dr + di * di;
            let zr = (nr * dr + ni * di) / dd;
            let zi = (ni * dr - nr * di) / dd;
            let a1 = -2.0 * zr;
            let a2 = zr * zr + zi * zi;
            let g = (1.0 + a1 + a2) / 4.0;
            sections.push(Biquad {
                b0: g,
                b1: 2.0 * g,
                b2: g,
                a1,
                a2,
            });
        }
        if order % 2 == 1 {
            let s = -warped;
            let z = (k + s) / (k - s);
            let g = (1.0 - z) / 2.0;
            sections.push(Biquad {
                b0: g,
                b1: g,
                b2: 0.0,
                a1: -z,
                a2: 0.0,
            });
        }

        Ok(Self {
            sections,
            order,
            cutoff_hz,
            sample_rate_hz,
        })
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn cutoff_hz(&self) -> f64 {
        self.cutoff_hz
    }

    /// Magnitude of the designed digital response at `freq_hz`.
    pub fn magnitude_at(&self, freq_hz: f64) -> f64 {
        let omega = 2.0 * PI * freq_hz / self.sample_rate_hz;
        self.sections
            .iter()
            .map(|s| {
                let (re, im) = s.response(omega);
                (re * re + im * im).sqrt()
            })
            .product()
    }

    /// Causal filtering from zero initial state.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite(i));
        }
        let mut y = x.to_vec();
        for s in &self.sections {
            let (mut z1, mut z2) = (0.0, 0.0);
            for v in y.iter_mut() {
                let input = *v;
                let out = s.b0 * input + z1;
                z1 = s.b1 * input - s.a1 * out + z2;
                z2 = s.b2 * input - s.a2 * out;
                *v = out;
            }
        }
        Ok(y)
    }
}

/// Low-pass `x` sampled at `fs` Hz with an order-`order` Butterworth filter.
pub fn butterworth_lowpass(x: &[f64], fs: f64, order: usize, cutoff_hz: f64) -> Result<Vec<f64>> {
    ButterworthLowpass::design(order, cutoff_hz, fs)?.apply(x)
}
