//! Declarative experiment configuration (TOML).
//!
//! ```toml
//! experiment = "e1"          # e1 | e2 | e3 | e4
//! seed = 7
//! dataset_root = "data/circor"
//! work_dir = "work"
//! relabel_file = "relabels.jsonl"   # required by e3
//! voting = true
//!
//! [preprocess]
//! window_seconds = 4          # also lowpass_order, lowpass_cutoff_hz
//!
//! [features]
//! kind = "wst"                # stft | mfcc | wst
//! wst_j = 4                   # any FeatureParams field
//!
//! [model]
//! preset = "CNN1D"            # CNN1D | CRNN | LSTM_RNN
//! lstm_hidden = 128
//! [model.cnn]
//! channels = [8, 16, 32, 64]
//!
//! [train]
//! batch_size = 126
//! learning_rate = 3e-5        # defaults per experiment and preset
//! epochs = 100
//! patience = 20               # optional early stop on validation F1
//! weighted_sampling = true
//! split = [0.7, 0.15, 0.15]
//!
//! [downsample]                # keep this many segments of a class
//! Normal = 3924
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pcg_core::features::{FeatureKind, FeatureParams};
use pcg_core::preprocess::PreprocessConfig;
use pcg_core::{ClassLabel, DatasetTag, Task};
use pcg_nn::{ModelPreset, PresetConfig};
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};
use crate::manifest::DatasetManifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    /// Three-class murmur detection on the original 2022 labels.
    #[default]
    E1,
    /// Present vs Absent; Unknown segments are left out.
    E2,
    /// Three-class murmur detection on relabeled segments.
    E3,
    /// Normal vs Abnormal on the 2016 dataset.
    E4,
}

impl Experiment {
    pub fn task(self) -> Task {
        match self {
            Self::E1 | Self::E3 => Task::Murmur,
            Self::E2 => Task::MurmurBinary,
            Self::E4 => Task::Abnormality,
        }
    }

    pub fn dataset(self) -> DatasetTag {
        match self {
            Self::E4 => DatasetTag::Pcg2016,
            _ => DatasetTag::Pcg2022,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::E1 => "e1",
            Self::E2 => "e2",
            Self::E3 => "e3",
            Self::E4 => "e4",
        }
    }

    pub fn default_learning_rate(self, preset: ModelPreset) -> f64 {
        match (preset, self) {
            (ModelPreset::LstmRnn, _) => 1e-3,
            (_, Self::E4) => 1e-4,
            _ => 3e-5,
        }
    }
}

impl FromStr for Experiment {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "e1" => Ok(Self::E1),
            "e2" => Ok(Self::E2),
            "e3" => Ok(Self::E3),
            "e4" => Ok(Self::E4),
            _ => Err(PipelineError::Config(format!("unknown experiment {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub kind: FeatureKind,
    #[serde(flatten)]
    pub params: FeatureParams,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            kind: FeatureKind::Wst,
            params: FeatureParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub preset: ModelPreset,
    #[serde(flatten)]
    pub layers: PresetConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            preset: ModelPreset::Cnn1d,
            layers: PresetConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    pub epochs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub patience: Option<usize>,
    pub weighted_sampling: bool,
    pub split: [f64; 3],
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 126,
            learning_rate: None,
            epochs: 100,
            patience: None,
            weighted_sampling: true,
            split: [0.7, 0.15, 0.15],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset_root: Option<PathBuf>,
    pub work_dir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relabel_file: Option<PathBuf>,
    pub voting: bool,
    pub preprocess: PreprocessConfig,
    pub features: FeatureConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub downsample: BTreeMap<ClassLabel, usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::E1,
            seed: 0,
            dataset_root: None,
            work_dir: PathBuf::from("work"),
            relabel_file: None,
            voting: false,
            preprocess: PreprocessConfig::default(),
            features: FeatureConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            downsample: BTreeMap::new(),
        }
    }
}

impl ExperimentConfig {
    /// Defaults for one experiment. E4 keeps 3,924 Normal segments so that,
    /// with every Abnormal segment of the 4 s 2016 corpus, 7,844 remain.
    pub fn for_experiment(experiment: Experiment) -> Self {
        let mut cfg = Self {
            experiment,
            ..Self::default()
        };
        if experiment == Experiment::E4 {
            cfg.downsample.insert(ClassLabel::Normal, 3924);
        }
        cfg
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn task(&self) -> Task {
        self.experiment.task()
    }

    pub fn learning_rate(&self) -> f64 {
        self.train
            .learning_rate
            .unwrap_or_else(|| self.experiment.default_learning_rate(self.model.preset))
    }

    /// Segment store for the configured window length.
    pub fn store_dir(&self) -> PathBuf {
        self.work_dir.join(format!("store_n{}", self.preprocess.window_seconds))
    }

    /// Output directory of one run.
    pub fn run_dir(&self) -> PathBuf {
        self.work_dir.join(format!(
            "{}_{}_{}_n{}_seed{}",
            self.experiment.as_str(),
            self.model.preset.as_str().to_ascii_lowercase(),
            self.features.kind.as_str(),
            self.preprocess.window_seconds,
            self.seed
        ))
    }

    /// Checks that need no data.
    pub fn validate(&self) -> Result<()> {
        if self.experiment == Experiment::E3 && self.relabel_file.is_none() {
            return Err(PipelineError::Config("e3 needs a relabel_file".into()));
        }
        if self.train.batch_size == 0 || self.train.epochs == 0 {
            return Err(PipelineError::Config("batch_size and epochs must be positive".into()));
        }
        self.features.params.validate()?;
        Ok(())
    }

    /// Checks against the built manifest.
    pub fn validate_manifest(&self, manifest: &DatasetManifest) -> Result<()> {
        if manifest.dataset != self.experiment.dataset() {
            return Err(PipelineError::Config(format!(
                "{} expects the {:?} dataset, found {:?}",
                self.experiment.as_str(),
                self.experiment.dataset(),
                manifest.dataset
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_defaults() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.train.batch_size, 126);
        assert_eq!(cfg.learning_rate(), 3e-5);
        assert_eq!(cfg.features.params.nfft, 128);
        let e4 = ExperimentConfig::for_experiment(Experiment::E4);
        assert_eq!(e4.learning_rate(), 1e-4);
        assert_eq!(e4.task(), Task::Abnormality);
        let mut lstm = ExperimentConfig::default();
        lstm.model.preset = ModelPreset::LstmRnn;
        assert_eq!(lstm.learning_rate(), 1e-3);
    }

    #[test]
    fn toml_round_trip_and_partial_files() {
        let cfg = ExperimentConfig::for_experiment(Experiment::E4);
        let text = cfg.to_toml_string();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);

        let partial = ExperimentConfig::from_toml_str(
            "experiment = \"e2\"\nseed = 3\n[features]\nkind = \"mfcc\"\nn_mfcc = 13\n[model]\npreset = \"LSTM_RNN\"\nlstm_hidden = 32\n[train]\nepochs = 5\n",
        )
        .unwrap();
        assert_eq!(partial.experiment, Experiment::E2);
        assert_eq!(partial.features.kind, FeatureKind::Mfcc);
        assert_eq!(partial.features.params.n_mfcc, 13);
        assert_eq!(partial.features.params.nfft, 128);
        assert_eq!(partial.model.layers.lstm_hidden, 32);
        assert_eq!(partial.train.epochs, 5);
        assert_eq!(partial.train.batch_size, 126);
    }

    #[test]
    fn e3_requires_relabels() {
        let cfg = ExperimentConfig::for_experiment(Experiment::E3);
        assert!(matches!(cfg.validate(), Err(PipelineError::Config(_))));
        assert!(ExperimentConfig::from_toml_str("experiment = \"e9\"").is_err());
    }
}
