//! Phonocardiogram preprocessing, time-frequency feature extraction and
//! evaluation metrics.

pub mod error;
pub mod features;
pub mod label;
pub mod metrics;
pub mod preprocess;
pub mod store;
pub mod wav;

pub use error::{CoreError, Result};
pub use label::{ClassLabel, DatasetTag, Location, Task};
