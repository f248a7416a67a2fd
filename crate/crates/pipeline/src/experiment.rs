//! End-to-end runs: build or reuse the segment store, split, extract,
//! train, evaluate, and write results.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use pcg_core::metrics::MetricReport;
use pcg_core::store::{to_jsonl, write_atomic};
use pcg_nn::{load_checkpoint, save_checkpoint, Model};
use serde::{Deserialize, Serialize};

use crate::balance::downsample_majority;
use crate::config::ExperimentConfig;
use crate::error::{PipelineError, Result};
use crate::features::{extract_features, load_features};
use crate::manifest::{BuildOptions, DatasetManifest, Split};
use crate::split::split_patients;
use crate::store::{open_or_build, SegmentStore};
use crate::train::{predict, segment_report, train_model, Dataset, EpochRecord, Prediction};

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: MetricReport,
    /// Patient+location level metrics when voting is enabled.
    pub voted: Option<MetricReport>,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
    pub predictions: Vec<Prediction>,
    pub run_dir: PathBuf,
}

/// Segment store and split manifest for `cfg`, restricted to the
/// experiment's task and balanced as configured.
pub fn prepare(cfg: &ExperimentConfig) -> Result<(SegmentStore, DatasetManifest)> {
    cfg.validate()?;
    let root = cfg
        .dataset_root
        .as_deref()
        .ok_or_else(|| PipelineError::Config("dataset_root is not set".into()))?;
    let options = BuildOptions {
        preprocess: cfg.preprocess,
        relabel_file: cfg.relabel_file.clone(),
    };
    let (store, mut manifest) = open_or_build(root, &cfg.store_dir(), &options)?;
    cfg.validate_manifest(&manifest)?;
    manifest.restrict_to_task(cfg.task());
    if !cfg.downsample.is_empty() {
        manifest = downsample_majority(&manifest, &cfg.downsample, cfg.seed)?;
    }
    split_patients(&mut manifest, cfg.train.split, cfg.seed)?;
    Ok((store, manifest))
}

/// Extract (or reuse) features and load them with their labels.
pub fn load_dataset(cfg: &ExperimentConfig, store: &SegmentStore, manifest: &DatasetManifest) -> Result<Dataset> {
    let kind = cfg.features.kind;
    let params = &cfg.features.params;
    let report = extract_features(store, &manifest.entries, kind, params)?;
    log::info!("features: {} computed, {} cached", report.computed, report.cached);
    let (shape, inputs) = load_features(store, &manifest.entries, kind, params)?;
    Dataset::new(cfg.task(), shape, inputs, manifest.entries.clone())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    Ok(write_atomic(path, &serde_json::to_vec_pretty(value).expect("serializable"))?)
}

fn evaluate(cfg: &ExperimentConfig, model: &Model, ds: &Dataset) -> Result<(MetricReport, Option<MetricReport>, Vec<Prediction>)> {
    let test_idx = ds.indices(Split::Test);
    let preds = predict(model, ds, &test_idx, cfg.train.batch_size)?;
    let report = segment_report(ds, &test_idx, &preds, false)?;
    let voted = if cfg.voting {
        Some(segment_report(ds, &test_idx, &preds, true)?)
    } else {
        None
    };
    Ok((report, voted, preds))
}

fn write_reports(dir: &Path, report: &MetricReport, voted: Option<&MetricReport>, preds: &[Prediction]) -> Result<()> {
    write_json(&dir.join("report.json"), report)?;
    write_atomic(&dir.join("confusion.csv"), report.confusion.to_csv().as_bytes())?;
    write_atomic(&dir.join("predictions.jsonl"), &to_jsonl(preds))?;
    if let Some(v) = voted {
        write_json(&dir.join("report_voted.json"), v)?;
        write_atomic(&dir.join("confusion_voted.csv"), v.confusion.to_csv().as_bytes())?;
    }
    Ok(())
}

/// Train on the train split, pick the best validation epoch, evaluate once on
/// the test split, and write `config.toml`, `history.json`, `model.ckpt`,
/// `report.json`, `confusion.csv` and `predictions.jsonl` to the run
/// directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let (store, manifest) = prepare(cfg)?;
    let ds = load_dataset(cfg, &store, &manifest)?;
    let outcome = train_model(&ds, cfg)?;
    let (report, voted, predictions) = evaluate(cfg, &outcome.model, &ds)?;

    let run_dir = cfg.run_dir();
    std::fs::create_dir_all(&run_dir).map_err(|e| PipelineError::io(&run_dir, e))?;
    write_atomic(&run_dir.join("config.toml"), cfg.to_toml_string().as_bytes())?;
    write_json(&run_dir.join("history.json"), &outcome.history)?;
    save_checkpoint(&run_dir.join("model.ckpt"), &outcome.model, None)?;
    write_reports(&run_dir, &report, voted.as_ref(), &predictions)?;
    Ok(ExperimentOutcome {
        report,
        voted,
        best_epoch: outcome.best_epoch,
        history: outcome.history,
        predictions,
        run_dir,
    })
}

/// Evaluate a saved checkpoint on the configured test split.
pub fn evaluate_checkpoint(cfg: &ExperimentConfig, checkpoint: &Path) -> Result<(MetricReport, Option<MetricReport>)> {
    let (store, manifest) = prepare(cfg)?;
    let ds = load_dataset(cfg, &store, &manifest)?;
    let (model, _) = load_checkpoint(checkpoint)?;
    let (report, voted, preds) = evaluate(cfg, &model, &ds)?;
    if let Some(dir) = checkpoint.parent() {
        write_reports(dir, &report, voted.as_ref(), &preds)?;
    }
    Ok((report, voted))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub window_seconds: u32,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
    /// Row with the highest F1 (first on ties).
    pub best: usize,
}

impl AblationTable {
    /// Markdown table; the best row is marked with `*`.
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| N (s) | Accuracy | Precision | Recall | F1 |\n|---|---|---|---|---|\n");
        for (i, r) in self.rows.iter().enumerate() {
            let mark = if i == self.best { "*" } else { "" };
            let _ = writeln!(
                out,
                "| {}{mark} | {:.2} | {:.2} | {:.2} | {:.2} |",
                r.window_seconds,
                100.0 * r.accuracy,
                100.0 * r.precision,
                100.0 * r.recall,
                100.0 * r.f1
            );
        }
        out
    }
}

/// One full run per window length; windows never overlap.
pub fn ablate_window(cfg: &ExperimentConfig, sizes: &[u32]) -> Result<AblationTable> {
    if sizes.is_empty() {
        return Err(PipelineError::Config("no window sizes to ablate".into()));
    }
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let mut c = cfg.clone();
        c.preprocess.window_seconds = n;
        let out = run_experiment(&c)?;
        rows.push(AblationRow {
            window_seconds: n,
            accuracy: out.report.accuracy,
            precision: out.report.macro_precision,
            recall: out.report.macro_recall,
            f1: out.report.macro_f1,
        });
    }
    let best = (0..rows.len())
        .fold(0, |b, i| if rows[i].f1 > rows[b].f1 { i } else { b });
    Ok(AblationTable { rows, best })
}
