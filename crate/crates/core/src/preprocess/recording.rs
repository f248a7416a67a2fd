use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::label::{ClassLabel, DatasetTag, Location};
use crate::wav;

/// One PCG recording with its provenance and recording-level label.
#[derive(Debug, Clone, PartialEq)]
pub struct PcgRecording {
    pub recording_id: String,
    pub patient_id: String,
    pub location: Location,
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
    pub label: ClassLabel,
}

impl PcgRecording {
    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    /// 2000 Hz and 4000 Hz are the rates of the two supported corpora; other
    /// rates load but are flagged.
    pub fn has_standard_rate(&self) -> bool {
        matches!(self.sample_rate_hz, 2000 | 4000)
    }
}

/// Metadata row describing one recording file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetadataRow {
    pub recording_id: String,
    pub patient_id: String,
    pub location: Location,
    pub label: ClassLabel,
    /// Rate stated by the metadata, if any; must agree with the file header.
    pub sample_rate_hz: Option<u32>,
    pub wav_path: PathBuf,
}

/// Label and location metadata for every recording of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMetadata {
    pub dataset: DatasetTag,
    pub rows: BTreeMap<String, MetadataRow>,
}

impl DatasetMetadata {
    pub fn new(dataset: DatasetTag) -> Self {
        Self {
            dataset,
            rows: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, row: MetadataRow) {
        self.rows.insert(row.recording_id.clone(), row);
    }

    pub fn get(&self, recording_id: &str) -> Option<&MetadataRow> {
        self.rows.get(recording_id)
    }
}

/// Load one WAV file and attach its metadata row, keyed by the file stem.
pub fn load_recording(path: &Path, meta: &DatasetMetadata) -> Result<PcgRecording> {
    let recording_id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| CoreError::Wav {
            path: path.to_path_buf(),
            reason: "file name is not valid UTF-8".into(),
        })?;
    let row = meta
        .get(recording_id)
        .ok_or_else(|| CoreError::MissingLabel(recording_id.to_string()))?;

    if !meta.dataset.accepts(row.label) {
        return Err(CoreError::LabelTaskMismatch {
            label: row.label.to_string(),
            context: format!("dataset {:?}", meta.dataset),
        });
    }
    let single = row.location == Location::Single;
    if single != (meta.dataset == DatasetTag::Pcg2016) {
        return Err(CoreError::InvalidParameter(format!(
            "location {} is inconsistent with dataset {:?}",
            row.location, meta.dataset
        )));
    }

    let decoded = wav::read_wav_file(path)?;
    if let Some(expected) = row.sample_rate_hz {
        if expected != decoded.sample_rate_hz {
            return Err(CoreError::SampleRateMismatch {
                path: path.to_path_buf(),
                header: decoded.sample_rate_hz,
                expected,
            });
        }
    }
    if decoded.samples.is_empty() {
        return Err(CoreError::Wav {
            path: path.to_path_buf(),
            reason: "no samples".into(),
        });
    }

    let rec = PcgRecording {
        recording_id: recording_id.to_string(),
        patient_id: row.patient_id.clone(),
        location: row.location,
        samples: decoded.samples,
        sample_rate_hz: decoded.sample_rate_hz,
        label: row.label,
    };
    if !rec.has_standard_rate() {
        log::warn!(
            "recording {} has non-standard sample rate {} Hz",
            rec.recording_id,
            rec.sample_rate_hz
        );
    }
    Ok(rec)
}
