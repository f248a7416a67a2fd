//! On-disk segment store:
//!
//! ```text
//! <root>/store.json              dataset tag, window, preprocessing, stats
//! <root>/index.jsonl             one ManifestEntry per line
//! <root>/segments/<id>.seg       normalized samples
//! <root>/features/<kind>/<id>.feat
//! ```

use std::path::{Path, PathBuf};

use pcg_core::features::FeatureKind;
use pcg_core::preprocess::{PreprocessConfig, SegmentationStats};
use pcg_core::store as core_store;
use pcg_core::DatasetTag;
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};
use crate::manifest::{build_manifest, BuildOptions, BuildReport, DatasetManifest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreInfo {
    pub dataset: DatasetTag,
    pub window_seconds: u32,
    pub preprocess: PreprocessConfig,
    pub stats: SegmentationStats,
    pub rejected: Vec<String>,
    pub flagged_rates: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SegmentStore {
    root: PathBuf,
}

impl SegmentStore {
    pub fn create(root: &Path) -> Result<Self> {
        let segs = root.join("segments");
        std::fs::create_dir_all(&segs).map_err(|e| PipelineError::io(&segs, e))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn open(root: &Path) -> Result<Self> {
        let store = Self { root: root.to_path_buf() };
        if !store.info_path().is_file() {
            return Err(PipelineError::Invalid(format!("{} is not a segment store", root.display())));
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn info_path(&self) -> PathBuf {
        self.root.join("store.json")
    }

    fn index_path(&self) -> PathBuf {
        self.root.join("index.jsonl")
    }

    pub fn segment_path(&self, segment_id: &str) -> PathBuf {
        self.root.join("segments").join(format!("{segment_id}.seg"))
    }

    pub fn feature_path(&self, kind: FeatureKind, segment_id: &str) -> PathBuf {
        self.root.join("features").join(kind.as_str()).join(format!("{segment_id}.feat"))
    }

    pub fn write_segment(&self, segment_id: &str, samples: &[f64], sample_rate_hz: u32) -> Result<()> {
        Ok(core_store::write_segment(&self.segment_path(segment_id), samples, sample_rate_hz)?)
    }

    pub fn read_segment(&self, segment_id: &str) -> Result<(Vec<f64>, u32)> {
        Ok(core_store::read_segment(&self.segment_path(segment_id))?)
    }

    pub fn info(&self) -> Result<StoreInfo> {
        let path = self.info_path();
        let text = std::fs::read_to_string(&path).map_err(|e| PipelineError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| PipelineError::Invalid(format!("{}: {e}", path.display())))
    }

    /// Persist the manifest (without split assignments) and store metadata.
    pub fn save(&self, manifest: &DatasetManifest, info: &StoreInfo) -> Result<()> {
        let entries: Vec<_> = manifest
            .entries
            .iter()
            .map(|e| crate::manifest::ManifestEntry { split: None, ..e.clone() })
            .collect();
        core_store::write_jsonl(&self.index_path(), &entries)?;
        let json = serde_json::to_vec_pretty(info).expect("serializable");
        Ok(core_store::write_atomic(&self.info_path(), &json)?)
    }

    pub fn load_manifest(&self) -> Result<DatasetManifest> {
        let info = self.info()?;
        Ok(DatasetManifest {
            dataset: info.dataset,
            window_seconds: info.window_seconds,
            entries: core_store::read_jsonl(&self.index_path())?,
        })
    }
}

/// Build a segment store under `store_dir` from the dataset at `root`.
pub fn preprocess_to_store(root: &Path, store_dir: &Path, options: &BuildOptions) -> Result<(SegmentStore, BuildReport)> {
    let store = SegmentStore::create(store_dir)?;
    let report = build_manifest(root, options, |entry, seg| {
        store.write_segment(&entry.segment_id, &seg.samples, seg.sample_rate_hz)
    })?;
    let info = StoreInfo {
        dataset: report.manifest.dataset,
        window_seconds: options.preprocess.window_seconds,
        preprocess: options.preprocess,
        stats: report.stats,
        rejected: report.rejected.clone(),
        flagged_rates: report.flagged_rates.clone(),
    };
    store.save(&report.manifest, &info)?;
    Ok((store, report))
}

/// Reuse the store at `store_dir` when it was built with the same
/// preprocessing, otherwise rebuild it. Relabels are applied to the returned
/// manifest, not persisted.
pub fn open_or_build(root: &Path, store_dir: &Path, options: &BuildOptions) -> Result<(SegmentStore, DatasetManifest)> {
    let reusable = SegmentStore::open(store_dir)
        .and_then(|s| s.info().map(|i| (s, i)))
        .ok()
        .filter(|(_, info)| info.preprocess == options.preprocess);
    let (store, mut manifest) = match reusable {
        Some((store, _)) => {
            let m = store.load_manifest()?;
            (store, m)
        }
        None => {
            let plain = BuildOptions {
                relabel_file: None,
                ..options.clone()
            };
            let (store, report) = preprocess_to_store(root, store_dir, &plain)?;
            (store, report.manifest)
        }
    };
    if let Some(path) = &options.relabel_file {
        manifest.apply_relabels(&crate::manifest::read_relabel_file(path)?)?;
    }
    Ok((store, manifest))
}
