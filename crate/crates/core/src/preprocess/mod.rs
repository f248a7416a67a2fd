//! Recording ingestion, out-of-band noise rejection, segmentation and
//! per-segment normalization.

mod filter;
mod layout;
mod recording;
mod segment;

pub use filter::{butterworth_lowpass, Biquad, ButterworthLowpass};
pub use layout::{
    detect_layout, parse_patient_file, read_circor_metadata, read_metadata,
    read_physionet2016_metadata,
};
pub use recording::{load_recording, DatasetMetadata, MetadataRow, PcgRecording};
pub use segment::{
    mean_and_stddev, segment_id, segment_recording, zscore_normalize, Segment, SegmentationStats,
    MIN_STDDEV,
};

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Denoising and segmentation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub lowpass_order: usize,
    pub lowpass_cutoff_hz: f64,
    pub window_seconds: u32,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            lowpass_order: 5,
            lowpass_cutoff_hz: 500.0,
            window_seconds: 4,
        }
    }
}

/// Segments of one recording after filtering, split by usability.
#[derive(Debug, Clone, Default)]
pub struct PreprocessedRecording {
    /// Normalized segments.
    pub segments: Vec<Segment>,
    /// Near-constant segments, kept un-normalized for noise-only review.
    pub rejected: Vec<Segment>,
}

/// Filter the whole recording, cut it into windows, then normalize each
/// window.
pub fn preprocess_recording(
    rec: &PcgRecording,
    config: &PreprocessConfig,
    stats: &mut SegmentationStats,
) -> Result<PreprocessedRecording> {
    let filtered = butterworth_lowpass(
        &rec.samples,
        rec.sample_rate_hz as f64,
        config.lowpass_order,
        config.lowpass_cutoff_hz,
    )?;
    let filtered_rec = PcgRecording {
        samples: filtered,
        ..rec.clone()
    };
    let mut out = PreprocessedRecording::default();
    for seg in segment_recording(&filtered_rec, config.window_seconds, stats)? {
        match zscore_normalize(&seg) {
            Ok(norm) => out.segments.push(norm),
            Err(CoreError::ZeroVariance { .. }) => out.rejected.push(seg),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::{ClassLabel, Location};

    #[test]
    fn silent_windows_are_routed_to_review() {
        let fs = 2000;
        let mut samples = vec![0.0; 4 * fs as usize];
        samples.extend((0..4 * fs).map(|i| (i as f64 * 0.1).sin()));
        let rec = PcgRecording {
            recording_id: "a1".into(),
            patient_id: "a1".into(),
            location: Location::Single,
            samples,
            sample_rate_hz: fs,
            label: ClassLabel::Normal,
        };
        let mut stats = SegmentationStats::default();
        let out = preprocess_recording(&rec, &PreprocessConfig::default(), &mut stats).unwrap();
        assert_eq!(out.rejected.len(), 1);
        assert_eq!(out.rejected[0].index, 0);
        assert_eq!(out.segments.len(), 1);
        assert_eq!(out.segments[0].index, 1);
    }
}
