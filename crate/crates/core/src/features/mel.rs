use crate::error::{CoreError, Result};

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters with unit peak, one row per filter over the
/// `nfft / 2 + 1` one-sided bins.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    pub n_mels: usize,
    pub n_bins: usize,
    /// Row-major `n_mels x n_bins`.
    pub weights: Vec<f64>,
    /// Edge bins of the triangles; filter `m` spans `edges[m]..=edges[m + 2]`
    /// and peaks at `edges[m + 1]`.
    pub edges: Vec<usize>,
}

impl MelFilterbank {
    pub fn row(&self, m: usize) -> &[f64] {
        &self.weights[m * self.n_bins..(m + 1) * self.n_bins]
    }

    pub fn center_bin(&self, m: usize) -> usize {
        self.edges[m + 1]
    }

    /// Filter energies `E_m = sum_k P[k] H_m[k]` of a power spectrum.
    pub fn apply(&self, power: &[f64], out: &mut [f64]) {
        for (m, o) in out.iter_mut().enumerate().take(self.n_mels) {
            let lo = self.edges[m];
            let hi = self.edges[m + 2];
            let row = self.row(m);
            *o = (lo..=hi).map(|k| row[k] * power[k]).sum();
        }
    }
}

/// `n_mels` triangles whose centers are equally spaced on the mel scale
/// between 0 Hz and `fs / 2`, snapped to FFT bins.
pub fn mel_filterbank(n_mels: usize, nfft: usize, fs: f64) -> Result<MelFilterbank> {
    if n_mels < 2 {
        return Err(CoreError::InvalidParameter("need at least 2 mel filters".into()));
    }
    if nfft < 2 || !(fs > 0.0) {
        return Err(CoreError::InvalidParameter("bad nfft or sample rate".into()));
    }
    let n_bins = nfft / 2 + 1;
    let top = hz_to_mel(fs / 2.0);
    let edges: Vec<usize> = (0..n_mels + 2)
        .map(|i| {
            let hz = mel_to_hz(top * i as f64 / (n_mels + 1) as f64);
            (((nfft + 1) as f64 * hz / fs).floor() as usize).min(n_bins - 1)
        })
        .collect();
    if edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CoreError::MelBinCollapse { n_mels, nfft });
    }

    let mut weights = vec![0.0; n_mels * n_bins];
    for m in 0..n_mels {
        let (lo, center, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        let row = &mut weights[m * n_bins..(m + 1) * n_bins];
        for (k, w) in row.iter_mut().enumerate().take(hi + 1).skip(lo) {
            *w = if k <= center {
                (k - lo) as f64 / (center - lo) as f64
            } else {
                (hi - k) as f64 / (hi - center) as f64
            };
        }
    }
    Ok(MelFilterbank {
        n_mels,
        n_bins,
        weights,
        edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mel_scale_round_trip() {
        for hz in [0.0, 100.0, 700.0, 2000.0, 8000.0] {
            assert!((mel_to_hz(hz_to_mel(hz)) - hz).abs() < 1e-9);
        }
        assert!((hz_to_mel(700.0) - 2595.0 * 2f64.log10()).abs() < 1e-9);
    }

    #[test]
    fn shape_and_monotone_centers() {
        let fb = mel_filterbank(26, 128, 4000.0).unwrap();
        assert_eq!((fb.n_mels, fb.n_bins), (26, 65));
        assert_eq!(fb.weights.len(), 26 * 65);

        // Independent arithmetic for the expected peak bins.
        let top = 2595.0 * (1.0f64 + 2000.0 / 700.0).log10();
        for m in 0..26 {
            let mel = top * (m + 1) as f64 / 27.0;
            let hz = 700.0 * (10f64.powf(mel / 2595.0) - 1.0);
            let expected_bin = (129.0 * hz / 4000.0).floor() as usize;
            let row = fb.row(m);
            let argmax = (0..65).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
            assert_eq!(argmax, expected_bin);
            if m > 0 {
                assert!(fb.center_bin(m) > fb.center_bin(m - 1));
            }
        }
    }

    #[test]
    fn triangles_are_nonnegative_with_single_unit_peak() {
        let fb = mel_filterbank(26, 128, 4000.0).unwrap();
        for m in 0..26 {
            let row = fb.row(m);
            assert!(row.iter().all(|&v| v >= 0.0));
            assert_eq!(row.iter().filter(|&&v| v == 1.0).count(), 1);
            let max = row.iter().cloned().fold(f64::MIN, f64::max);
            assert_eq!(row.iter().filter(|&&v| v == max).count(), 1);
        }
    }

    #[test]
    fn support_of_m_ends_where_m_plus_two_begins() {
        let fb = mel_filterbank(26, 128, 4000.0).unwrap();
        let support = |m: usize| {
            let row = fb.row(m);
            let first = row.iter().position(|&v| v > 0.0).unwrap();
            let last = row.iter().rposition(|&v| v > 0.0).unwrap();
            (first, last)
        };
        for m in 0..24 {
            // Nonzero support is open at both edges, so the last positive bin
            // of m sits one before the first positive bin of m + 2.
            assert_eq!(support(m).1 + 1, fb.edges[m + 2]);
            assert_eq!(support(m + 2).0, fb.edges[m + 2] + 1);
        }
    }

    #[test]
    fn too_many_filters_collapse() {
        assert!(matches!(
            mel_filterbank(60, 64, 4000.0),
            Err(CoreError::MelBinCollapse { .. })
        ));
        assert!(mel_filterbank(1, 128, 4000.0).is_err());
    }
}
