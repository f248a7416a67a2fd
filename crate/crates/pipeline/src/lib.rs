//! Experiment pipeline: segment store construction, patient-level splits,
//! class balancing, feature caching, training, evaluation and voting.

pub mod balance;
pub mod config;
mod error;
pub mod experiment;
pub mod features;
pub mod manifest;
pub mod split;
pub mod store;
pub mod synth;
pub mod train;

pub use config::{Experiment, ExperimentConfig};
pub use error::{PipelineError, Result};
pub use experiment::{ablate_window, run_experiment, AblationTable, ExperimentOutcome};
pub use manifest::{build_manifest, DatasetManifest, ManifestEntry, RelabelEntry, Split};
pub use store::SegmentStore;
