//! Training loop, batched inference and voting.

use std::collections::BTreeMap;

use pcg_core::metrics::{vote, MetricReport};
use pcg_core::{ClassLabel, Task};
use pcg_nn::{xavier_init, Adam, Model, Tensor};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::balance::{weights_from_counts, WeightedSampler};
use crate::config::ExperimentConfig;
use crate::error::{PipelineError, Result};
use crate::manifest::{ManifestEntry, Split};

/// Feature maps in memory with their labels and manifest entries.
#[derive(Debug, Clone)]
pub struct Dataset {
    /// (rows, cols) of every map; rows become input channels.
    pub shape: [usize; 2],
    pub inputs: Vec<Vec<f32>>,
    /// Class indices in the task's order.
    pub labels: Vec<usize>,
    pub entries: Vec<ManifestEntry>,
    pub task: Task,
}

impl Dataset {
    pub fn new(task: Task, shape: [usize; 2], inputs: Vec<Vec<f32>>, entries: Vec<ManifestEntry>) -> Result<Self> {
        let labels = entries
            .iter()
            .map(|e| {
                task.index_of(e.effective_label)
                    .ok_or_else(|| PipelineError::Invalid(format!("{} is labeled {}", e.segment_id, e.effective_label)))
            })
            .collect::<Result<_>>()?;
        if inputs.len() != entries.len() || inputs.iter().any(|x| x.len() != shape[0] * shape[1]) {
            return Err(PipelineError::Invalid("inputs do not match entries or shape".into()));
        }
        Ok(Self {
            shape,
            inputs,
            labels,
            entries,
            task,
        })
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.entries.len()).filter(|&i| self.entries[i].split == Some(split)).collect()
    }

    pub fn batch(&self, idx: &[usize]) -> Tensor {
        let per = self.shape[0] * self.shape[1];
        let mut data = Vec::with_capacity(per * idx.len());
        for &i in idx {
            data.extend(self.inputs[i].iter().map(|&v| v as f64));
        }
        Tensor::new(vec![idx.len(), self.shape[0], self.shape[1]], data).expect("batch shape")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
    pub val_macro_f1: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the epoch with the best validation macro-F1.
    pub model: Model,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub segment_id: String,
    pub label: ClassLabel,
    pub probs: Vec<f64>,
    /// Patient and auscultation location.
    pub group: String,
}

/// Train from scratch on the train split, selecting the epoch with the best
/// validation macro-F1 (the last epoch when there is no validation data).
pub fn train_model(ds: &Dataset, cfg: &ExperimentConfig) -> Result<TrainOutcome> {
    let task = ds.task;
    let spec = cfg.model.preset.build(ds.shape, task.num_classes(), &cfg.model.layers)?;
    let mut model = xavier_init(&spec, cfg.seed)?;
    let mut adam = Adam::new(cfg.learning_rate());
    let train_idx = ds.indices(Split::Train);
    let val_idx = ds.indices(Split::Val);
    if train_idx.is_empty() {
        return Err(PipelineError::Invalid("empty training split".into()));
    }

    let train_labels: Vec<ClassLabel> = train_idx.iter().map(|&i| ds.entries[i].effective_label).collect();
    let mut sampler = if cfg.train.weighted_sampling {
        let mut counts = BTreeMap::new();
        for l in &train_labels {
            *counts.entry(*l).or_default() += 1;
        }
        let weights = weights_from_counts(&counts, task.classes())?;
        Some(WeightedSampler::for_labels(&train_labels, &weights, cfg.seed.wrapping_add(1))?)
    } else {
        None
    };
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(2));

    let mut best: Option<(f64, usize, Model)> = None;
    let mut history = Vec::new();
    for epoch in 1..=cfg.train.epochs {
        let order: Vec<usize> = match &mut sampler {
            Some(s) => s.epoch(),
            None => {
                let mut o: Vec<usize> = (0..train_idx.len()).collect();
                o.shuffle(&mut shuffle_rng);
                o
            }
        };
        let mut loss_sum = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(cfg.train.batch_size) {
            let idx: Vec<usize> = chunk.iter().map(|&k| train_idx[k]).collect();
            if let Some(&leak) = idx.iter().find(|&&i| ds.entries[i].split != Some(Split::Train)) {
                return Err(PipelineError::Leakage(ds.entries[leak].segment_id.clone()));
            }
            let labels: Vec<usize> = idx.iter().map(|&i| ds.labels[i]).collect();
            model.forward(&ds.batch(&idx), true)?;
            loss_sum += model.backward_cross_entropy(&labels)?;
            adam.step(model.params_mut());
            batches += 1;
        }

        let (val_accuracy, val_macro_f1) = if val_idx.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            let preds = predict(&model, ds, &val_idx, cfg.train.batch_size)?;
            let report = segment_report(ds, &val_idx, &preds, false)?;
            (report.accuracy, report.macro_f1)
        };
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / batches as f64,
            val_accuracy,
            val_macro_f1,
        };
        log::info!(
            "epoch {epoch}: loss {:.4}, val acc {:.4}, val F1 {:.4}",
            record.train_loss,
            val_accuracy,
            val_macro_f1
        );
        history.push(record);

        let score = if val_macro_f1.is_nan() { epoch as f64 } else { val_macro_f1 };
        if best.as_ref().map_or(true, |(s, _, _)| score > *s) {
            best = Some((score, epoch, model.clone()));
        }
        if let (Some(p), Some((_, best_epoch, _))) = (cfg.train.patience, &best) {
            if epoch - best_epoch >= p {
                break;
            }
        }
    }
    let (_, best_epoch, model) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        model,
        best_epoch,
        history,
    })
}

/// Eval-mode predictions for `indices`.
pub fn predict(model: &Model, ds: &Dataset, indices: &[usize], batch_size: usize) -> Result<Vec<Prediction>> {
    let classes = ds.task.classes();
    let mut out = Vec::with_capacity(indices.len());
    for chunk in indices.chunks(batch_size.max(1)) {
        let probs = model.predict(&ds.batch(chunk))?;
        for (row, &i) in chunk.iter().enumerate() {
            let p = probs.row(row).to_vec();
            let arg = p
                .iter()
                .enumerate()
                .fold(0, |best, (k, v)| if *v > p[best] { k } else { best });
            out.push(Prediction {
                segment_id: ds.entries[i].segment_id.clone(),
                label: classes[arg],
                probs: p,
                group: ds.entries[i].group_key(),
            });
        }
    }
    Ok(out)
}

/// Metrics over segment predictions. With `voting`, predictions and truths
/// are first reduced to one label per patient+location group.
pub fn segment_report(ds: &Dataset, indices: &[usize], preds: &[Prediction], voting: bool) -> Result<MetricReport> {
    let truths: Vec<ClassLabel> = indices.iter().map(|&i| ds.entries[i].effective_label).collect();
    let labels: Vec<ClassLabel> = preds.iter().map(|p| p.label).collect();
    if !voting {
        let probs: Vec<Vec<f64>> = preds.iter().map(|p| p.probs.clone()).collect();
        return Ok(MetricReport::compute(ds.task, &labels, &truths, Some(&probs))?);
    }
    let (voted, voted_truth) = vote_groups(preds, &truths)?;
    Ok(MetricReport::compute(ds.task, &voted, &voted_truth, None)?)
}

/// Majority label per group for predictions and for truths, in group-key
/// order.
pub fn vote_groups(preds: &[Prediction], truths: &[ClassLabel]) -> Result<(Vec<ClassLabel>, Vec<ClassLabel>)> {
    let mut groups: BTreeMap<&str, (Vec<ClassLabel>, Vec<ClassLabel>)> = BTreeMap::new();
    for (p, t) in preds.iter().zip(truths) {
        let g = groups.entry(&p.group).or_default();
        g.0.push(p.label);
        g.1.push(*t);
    }
    let mut voted = Vec::with_capacity(groups.len());
    let mut voted_truth = Vec::with_capacity(groups.len());
    for (p, t) in groups.values() {
        voted.push(vote(p)?);
        voted_truth.push(vote(t)?);
    }
    Ok((voted, voted_truth))
}
