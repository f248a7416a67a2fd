use std::collections::BTreeMap;

use pcg_core::{ClassLabel, Task};
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{PipelineError, Result};
use crate::manifest::{DatasetManifest, Split};

/// `1 / count` per class of `task` within `split`.
pub fn class_weights(manifest: &DatasetManifest, split: Split, task: Task) -> Result<BTreeMap<ClassLabel, f64>> {
    let counts = manifest.counts(Some(split));
    if counts.values().sum::<usize>() == 0 {
        return Err(PipelineError::Invalid(format!("split {split:?} is empty")));
    }
    weights_from_counts(&counts, task.classes())
}

pub fn weights_from_counts(
    counts: &BTreeMap<ClassLabel, usize>,
    classes: &[ClassLabel],
) -> Result<BTreeMap<ClassLabel, f64>> {
    classes
        .iter()
        .map(|&c| match counts.get(&c).copied().unwrap_or(0) {
            0 => Err(PipelineError::Invalid(format!("class {c} has no training samples"))),
            n => Ok((c, 1.0 / n as f64)),
        })
        .collect()
}

/// With-replacement sampler drawing instance `i` with probability
/// proportional to `weights[i]`.
#[derive(Debug, Clone)]
pub struct WeightedSampler {
    dist: WeightedIndex<f64>,
    rng: ChaCha8Rng,
    len: usize,
}

impl WeightedSampler {
    pub fn new(weights: &[f64], seed: u64) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(PipelineError::Invalid("sampler weights must be positive".into()));
        }
        Ok(Self {
            dist: WeightedIndex::new(weights).map_err(|e| PipelineError::Invalid(e.to_string()))?,
            rng: ChaCha8Rng::seed_from_u64(seed),
            len: weights.len(),
        })
    }

    /// Each instance weighted by its class weight.
    pub fn for_labels(labels: &[ClassLabel], class_weights: &BTreeMap<ClassLabel, f64>, seed: u64) -> Result<Self> {
        let weights: Vec<f64> = labels
            .iter()
            .map(|l| {
                class_weights
                    .get(l)
                    .copied()
                    .ok_or_else(|| PipelineError::Invalid(format!("no weight for class {l}")))
            })
            .collect::<Result<_>>()?;
        Self::new(&weights, seed)
    }

    pub fn draw(&mut self, n: usize) -> Vec<usize> {
        (0..n).map(|_| self.dist.sample(&mut self.rng)).collect()
    }

    /// One epoch: as many draws as there are instances.
    pub fn epoch(&mut self) -> Vec<usize> {
        self.draw(self.len)
    }
}

/// Randomly keep `targets[c]` entries of each listed class, without
/// replacement; other classes are untouched and entry order is preserved.
pub fn downsample_majority(
    manifest: &DatasetManifest,
    targets: &BTreeMap<ClassLabel, usize>,
    seed: u64,
) -> Result<DatasetManifest> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![true; manifest.len()];
    for (&class, &target) in targets {
        let mut idx: Vec<usize> = (0..manifest.len())
            .filter(|&i| manifest.entries[i].effective_label == class)
            .collect();
        if target > idx.len() {
            return Err(PipelineError::Invalid(format!(
                "cannot keep {target} {class} entries, only {} available",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for &i in &idx[target..] {
            keep[i] = false;
        }
    }
    let entries = manifest
        .entries
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(e, _)| e.clone())
        .collect();
    Ok(DatasetManifest {
        entries,
        ..manifest.clone()
    })
}
