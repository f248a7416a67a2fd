use std::collections::BTreeMap;

use crate::error::{CoreError, Result};
use crate::label::ClassLabel;

/// Majority label of a patient/location group. Ties go to the more severe
/// label (Present over Unknown over Absent; Abnormal over Normal).
pub fn vote(predictions: &[ClassLabel]) -> Result<ClassLabel> {
    let mut counts: BTreeMap<ClassLabel, usize> = BTreeMap::new();
    for &p in predictions {
        *counts.entry(p).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by_key(|&(label, n)| (n, label.severity()))
        .map(|(label, _)| label)
        .ok_or(CoreError::Empty("vote group"))
}
