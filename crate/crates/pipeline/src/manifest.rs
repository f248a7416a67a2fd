use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use pcg_core::label::{relabel_allowed, RELABEL_RULE};
use pcg_core::preprocess::{load_recording, preprocess_recording, read_metadata, PreprocessConfig, Segment, SegmentationStats};
use pcg_core::{ClassLabel, DatasetTag, Location, Task};
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub segment_id: String,
    pub recording_id: String,
    pub patient_id: String,
    pub location: Location,
    pub index: usize,
    /// Label inherited from the recording.
    pub label: ClassLabel,
    /// Label after relabeling; differs from `label` only by moving to Unknown.
    pub effective_label: ClassLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

impl ManifestEntry {
    /// Voting group: patient plus auscultation location.
    pub fn group_key(&self) -> String {
        format!("{}_{}", self.patient_id, self.location.as_str())
    }
}

/// One line of a relabel file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelabelEntry {
    pub segment_id: String,
    pub from: ClassLabel,
    pub to: ClassLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub dataset: DatasetTag,
    pub window_seconds: u32,
    /// Sorted by (recording id, index).
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, segment_id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.segment_id == segment_id)
    }

    /// Effective-label counts, optionally restricted to one split.
    pub fn counts(&self, split: Option<Split>) -> BTreeMap<ClassLabel, usize> {
        let mut counts = BTreeMap::new();
        for e in &self.entries {
            if split.is_none() || e.split == split {
                *counts.entry(e.effective_label).or_default() += 1;
            }
        }
        counts
    }

    pub fn patients(&self) -> BTreeSet<&str> {
        self.entries.iter().map(|e| e.patient_id.as_str()).collect()
    }

    pub fn in_split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == Some(split))
    }

    /// Reset effective labels to the originals, then apply `relabels`.
    /// Any entry that breaks the transition rule is a hard error.
    pub fn apply_relabels(&mut self, relabels: &[RelabelEntry]) -> Result<()> {
        let index: BTreeMap<&str, usize> =
            self.entries.iter().enumerate().map(|(i, e)| (e.segment_id.as_str(), i)).collect();
        let mut targets = Vec::with_capacity(relabels.len());
        for r in relabels {
            let &i = index
                .get(r.segment_id.as_str())
                .ok_or_else(|| PipelineError::UnknownSegment(r.segment_id.clone()))?;
            let entry = &self.entries[i];
            if !relabel_allowed(r.from, r.to) {
                return Err(PipelineError::IllegalRelabel {
                    segment_id: r.segment_id.clone(),
                    from: r.from,
                    to: r.to,
                    rule: RELABEL_RULE,
                });
            }
            if entry.label != r.from {
                return Err(PipelineError::RelabelSourceMismatch {
                    segment_id: r.segment_id.clone(),
                    claimed: r.from,
                    actual: entry.label,
                });
            }
            targets.push((i, r.to));
        }
        for e in &mut self.entries {
            e.effective_label = e.label;
        }
        for (i, to) in targets {
            self.entries[i].effective_label = to;
        }
        Ok(())
    }

    /// Relabel entries reproducing the current effective labels.
    pub fn relabels(&self) -> Vec<RelabelEntry> {
        self.entries
            .iter()
            .filter(|e| e.effective_label != e.label)
            .map(|e| RelabelEntry {
                segment_id: e.segment_id.clone(),
                from: e.label,
                to: e.effective_label,
            })
            .collect()
    }

    /// Keep only entries whose effective label belongs to `task`.
    pub fn restrict_to_task(&mut self, task: Task) {
        self.entries.retain(|e| task.contains(e.effective_label));
    }
}

pub fn read_relabel_file(path: &Path) -> Result<Vec<RelabelEntry>> {
    Ok(pcg_core::store::read_jsonl(path)?)
}

#[derive(Debug, Clone, Default)]
pub struct BuildOptions {
    pub preprocess: PreprocessConfig,
    pub relabel_file: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct BuildReport {
    pub manifest: DatasetManifest,
    pub stats: SegmentationStats,
    /// Near-constant segments left out of the manifest.
    pub rejected: Vec<String>,
    /// Recordings at a rate other than the dataset's native one.
    pub flagged_rates: Vec<String>,
}

/// Load, filter, segment and normalize every recording under `root`.
/// Each accepted segment is handed to `sink` together with its entry, so the
/// caller decides where samples go. Labels come from the recording and are
/// then overridden by the relabel file, if any.
pub fn build_manifest(
    root: &Path,
    options: &BuildOptions,
    mut sink: impl FnMut(&ManifestEntry, &Segment) -> Result<()>,
) -> Result<BuildReport> {
    let meta = read_metadata(root)?;
    let mut stats = SegmentationStats::default();
    let mut entries = Vec::new();
    let mut rejected = Vec::new();
    let mut flagged_rates = Vec::new();
    for row in meta.rows.values() {
        let rec = load_recording(&row.wav_path, &meta)?;
        if rec.sample_rate_hz != meta.dataset.native_rate_hz() {
            log::warn!("{} is sampled at {} Hz", rec.recording_id, rec.sample_rate_hz);
            flagged_rates.push(rec.recording_id.clone());
        }
        let out = preprocess_recording(&rec, &options.preprocess, &mut stats)?;
        rejected.extend(out.rejected.iter().map(Segment::id));
        for seg in &out.segments {
            let entry = ManifestEntry {
                segment_id: seg.id(),
                recording_id: rec.recording_id.clone(),
                patient_id: rec.patient_id.clone(),
                location: rec.location,
                index: seg.index,
                label: seg.label,
                effective_label: seg.label,
                split: None,
            };
            sink(&entry, seg)?;
            entries.push(entry);
        }
    }
    entries.sort_by(|a, b| (&a.recording_id, a.index).cmp(&(&b.recording_id, b.index)));
    let mut manifest = DatasetManifest {
        dataset: meta.dataset,
        window_seconds: options.preprocess.window_seconds,
        entries,
    };
    if let Some(path) = &options.relabel_file {
        manifest.apply_relabels(&read_relabel_file(path)?)?;
    }
    Ok(BuildReport {
        manifest,
        stats,
        rejected,
        flagged_rates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ClassLabel::*;

    pub(crate) fn toy_manifest(labels: &[ClassLabel]) -> DatasetManifest {
        DatasetManifest {
            dataset: DatasetTag::Pcg2022,
            window_seconds: 4,
            entries: labels
                .iter()
                .enumerate()
                .map(|(i, &l)| ManifestEntry {
                    segment_id: format!("r{i:03}_s000"),
                    recording_id: format!("r{i:03}"),
                    patient_id: format!("p{}", i / 2),
                    location: Location::AV,
                    index: 0,
                    label: l,
                    effective_label: l,
                    split: None,
                })
                .collect(),
        }
    }

    fn relabel(id: &str, from: ClassLabel, to: ClassLabel) -> RelabelEntry {
        RelabelEntry {
            segment_id: id.into(),
            from,
            to,
        }
    }

    #[test]
    fn allowed_relabels_apply_and_export() {
        let mut m = toy_manifest(&[Present, Absent, Unknown]);
        m.apply_relabels(&[relabel("r000_s000", Present, Unknown)]).unwrap();
        assert_eq!(m.entries[0].effective_label, Unknown);
        assert_eq!(m.entries[0].label, Present);
        assert_eq!(m.relabels(), vec![relabel("r000_s000", Present, Unknown)]);
        let mut again = toy_manifest(&[Present, Absent, Unknown]);
        again.apply_relabels(&m.relabels()).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn forbidden_relabels_are_hard_errors() {
        for (from, to) in [(Present, Absent), (Absent, Present), (Unknown, Present), (Unknown, Absent)] {
            let mut m = toy_manifest(&[from]);
            let err = m.apply_relabels(&[relabel("r000_s000", from, to)]).unwrap_err();
            assert!(matches!(err, PipelineError::IllegalRelabel { .. }), "{from}->{to}");
        }
        let mut m = toy_manifest(&[Absent]);
        assert!(matches!(
            m.apply_relabels(&[relabel("r000_s000", Present, Unknown)]),
            Err(PipelineError::RelabelSourceMismatch { .. })
        ));
        assert!(matches!(
            m.apply_relabels(&[relabel("nope", Present, Unknown)]),
            Err(PipelineError::UnknownSegment(_))
        ));
    }

    #[test]
    fn empty_relabels_keep_originals() {
        let mut m = toy_manifest(&[Present, Absent, Unknown, Absent]);
        m.entries[1].effective_label = Unknown;
        m.apply_relabels(&[]).unwrap();
        assert!(m.entries.iter().all(|e| e.effective_label == e.label));
    }

    #[test]
    fn restrict_to_binary_task_drops_unknown() {
        let mut m = toy_manifest(&[Present, Absent, Unknown, Absent]);
        m.restrict_to_task(Task::MurmurBinary);
        assert_eq!(m.len(), 3);
        assert!(!m.counts(None).contains_key(&Unknown));
    }
}
