use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::label::ClassLabel;
use crate::preprocess::recording::PcgRecording;

/// Variance threshold under which a segment is considered unusable.
pub const MIN_STDDEV: f64 = 1e-12;

/// A fixed-length window cut from a recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub recording_id: String,
    pub index: usize,
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
    pub label: ClassLabel,
    pub window_seconds: u32,
}

impl Segment {
    pub fn id(&self) -> String {
        segment_id(&self.recording_id, self.index)
    }
}

pub fn segment_id(recording_id: &str, index: usize) -> String {
    format!("{recording_id}_s{index:03}")
}

/// Counters collected while segmenting a corpus.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentationStats {
    pub recordings: usize,
    pub segments: usize,
    /// Recordings shorter than one window.
    pub too_short: usize,
    pub dropped_tail_samples: usize,
}

/// Cut `rec` into non-overlapping windows of `window_seconds`, starting at
/// sample 0. A trailing remainder shorter than one window is dropped.
pub fn segment_recording(
    rec: &PcgRecording,
    window_seconds: u32,
    stats: &mut SegmentationStats,
) -> Result<Vec<Segment>> {
    if window_seconds == 0 {
        return Err(CoreError::InvalidParameter("window must be at least 1 second".into()));
    }
    let window = window_seconds as usize * rec.sample_rate_hz as usize;
    let count = rec.samples.len() / window;
    stats.recordings += 1;
    stats.segments += count;
    stats.dropped_tail_samples += rec.samples.len() - count * window;
    if count == 0 {
        stats.too_short += 1;
        log::warn!(
            "recording {} ({:.2} s) is shorter than one {} s window",
            rec.recording_id,
            rec.duration_seconds(),
            window_seconds
        );
    }
    Ok(rec
        .samples
        .chunks_exact(window)
        .enumerate()
        .map(|(index, chunk)| Segment {
            recording_id: rec.recording_id.clone(),
            index,
            samples: chunk.to_vec(),
            sample_rate_hz: rec.sample_rate_hz,
            label: rec.label,
            window_seconds,
        })
        .collect())
}

/// Mean and population standard deviation.
pub fn mean_and_stddev(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Z-score a segment with its own mean and population standard deviation.
pub fn zscore_normalize(seg: &Segment) -> Result<Segment> {
    if seg.samples.is_empty() {
        return Err(CoreError::Empty("segment"));
    }
    let (mean, sigma) = mean_and_stddev(&seg.samples);
    if !(sigma > MIN_STDDEV) {
        return Err(CoreError::ZeroVariance { sigma });
    }
    Ok(Segment {
        samples: seg.samples.iter().map(|v| (v - mean) / sigma).collect(),
        ..seg.clone()
    })
}
