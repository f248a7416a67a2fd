use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use pcg_core::{ClassLabel, Task};
use pcg_pipeline::experiment::{evaluate_checkpoint, prepare};
use pcg_pipeline::manifest::BuildOptions;
use pcg_pipeline::synth::{generate_toy_dataset, toy_label, ToyConfig};
use pcg_pipeline::train::{vote_groups, Prediction};
use pcg_pipeline::{ablate_window, build_manifest, run_experiment, Experiment, ExperimentConfig, Split};

const PATIENTS: usize = 30;

/// Toy dataset shared by every test in this file.
fn toy_root() -> &'static Path {
    static ROOT: OnceLock<PathBuf> = OnceLock::new();
    ROOT.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap().keep();
        let cfg = ToyConfig {
            patients: PATIENTS,
            seconds: 8.0,
            ..ToyConfig::default()
        };
        generate_toy_dataset(&dir, &cfg).unwrap();
        dir
    })
}

fn small_config(experiment: Experiment, work: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::for_experiment(experiment);
    cfg.dataset_root = Some(toy_root().to_path_buf());
    cfg.work_dir = work.to_path_buf();
    cfg.seed = 3;
    cfg.voting = true;
    cfg.model.layers.cnn.channels = vec![8, 8, 8, 8];
    cfg.model.layers.cnn.dense = vec![32, 16];
    cfg.train.epochs = 12;
    cfg.train.batch_size = 16;
    cfg.train.learning_rate = Some(1e-3);
    cfg
}

#[test]
fn synthetic_manifest_has_every_segment() {
    let mut seen = Vec::new();
    let report = build_manifest(toy_root(), &BuildOptions::default(), |e, seg| {
        seen.push((e.segment_id.clone(), seg.samples.len()));
        Ok(())
    })
    .unwrap();
    let m = &report.manifest;
    assert_eq!(m.len(), PATIENTS * 2 * 2);
    assert_eq!(seen.len(), m.len());
    assert!(seen.iter().all(|(_, n)| *n == 16_000));
    for e in &m.entries {
        let p: usize = e.patient_id.parse::<usize>().unwrap() - 10_000;
        assert_eq!(e.label, toy_label(p));
        assert_eq!(e.effective_label, e.label);
    }
    assert_eq!(m.patients().len(), PATIENTS);
}

#[test]
fn prepared_splits_are_patient_disjoint() {
    let work = tempfile::tempdir().unwrap();
    let (_, m) = prepare(&small_config(Experiment::E1, work.path())).unwrap();
    let mut owner = std::collections::BTreeMap::new();
    for e in &m.entries {
        let s = e.split.expect("every entry is assigned");
        assert_eq!(*owner.entry(e.patient_id.clone()).or_insert(s), s, "{}", e.patient_id);
    }
    for s in Split::ALL {
        assert!(m.entries.iter().any(|e| e.split == Some(s)));
    }
}

#[test]
fn binary_task_yields_two_by_two_matrix() {
    let work = tempfile::tempdir().unwrap();
    let out = run_experiment(&small_config(Experiment::E2, work.path())).unwrap();
    let cm = &out.report.confusion;
    assert_eq!(cm.classes, Task::MurmurBinary.classes());
    assert_eq!(cm.counts.len(), 2);
    assert!(cm.counts.iter().all(|r| r.len() == 2));
    assert!(out.report.weighted_accuracy.is_none());
    for file in ["config.toml", "report.json", "confusion.csv", "predictions.jsonl", "model.ckpt", "history.json"] {
        assert!(out.run_dir.join(file).is_file(), "{file}");
    }
}

#[test]
fn three_class_run_learns_and_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = run_experiment(&small_config(Experiment::E1, a.path())).unwrap();
    let second = run_experiment(&small_config(Experiment::E1, b.path())).unwrap();
    assert_eq!(first.predictions, second.predictions);
    assert_eq!(first.history, second.history);
    assert!(first.report.accuracy > 0.6, "accuracy {}", first.report.accuracy);
    assert!(first.report.weighted_accuracy.is_some());
    let voted = first.voted.as_ref().unwrap();
    assert!(voted.samples <= first.report.samples);

    let ckpt = first.run_dir.join("model.ckpt");
    let (again, _) = evaluate_checkpoint(&small_config(Experiment::E1, a.path()), &ckpt).unwrap();
    assert_eq!(again.confusion, first.report.confusion);
}

#[test]
fn single_size_ablation_matches_plain_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut cfg = small_config(Experiment::E2, a.path());
    cfg.train.epochs = 3;
    let table = ablate_window(&cfg, &[4]).unwrap();
    cfg.work_dir = b.path().to_path_buf();
    let run = run_experiment(&cfg).unwrap();
    assert_eq!(table.rows.len(), 1);
    assert_eq!(table.best, 0);
    assert_eq!(table.rows[0].accuracy, run.report.accuracy);
    assert_eq!(table.rows[0].f1, run.report.macro_f1);
    assert!(table.to_markdown().contains("| 4* |"));
}

fn pred(group: &str, label: ClassLabel) -> Prediction {
    Prediction {
        segment_id: String::new(),
        label,
        probs: Vec::new(),
        group: group.into(),
    }
}

#[test]
fn identical_segment_predictions_vote_to_that_label() {
    use ClassLabel::*;
    let preds = [pred("1_AV", Present), pred("1_AV", Present), pred("1_AV", Present), pred("2_MV", Absent)];
    let truths = [Present, Present, Unknown, Absent];
    let (voted, truth) = vote_groups(&preds, &truths).unwrap();
    assert_eq!(voted, vec![Present, Absent]);
    assert_eq!(truth, vec![Present, Absent]);
}
