use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::label::{ClassLabel, Task};

/// Counts indexed `[expert][classifier]`: rows are true labels, columns are
/// predictions, both in the task's class order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<ClassLabel>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn empty(classes: &[ClassLabel]) -> Self {
        Self {
            classes: classes.to_vec(),
            counts: vec![vec![0; classes.len()]; classes.len()],
        }
    }

    pub fn from_counts(classes: &[ClassLabel], counts: Vec<Vec<u64>>) -> Result<Self> {
        if counts.len() != classes.len() || counts.iter().any(|r| r.len() != classes.len()) {
            return Err(CoreError::InvalidParameter("confusion matrix must be square over its classes".into()));
        }
        Ok(Self {
            classes: classes.to_vec(),
            counts,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn index_of(&self, label: ClassLabel) -> Option<usize> {
        self.classes.iter().position(|&c| c == label)
    }

    /// Count for (expert label, classifier label).
    pub fn get(&self, expert: ClassLabel, classifier: ClassLabel) -> u64 {
        match (self.index_of(expert), self.index_of(classifier)) {
            (Some(r), Some(c)) => self.counts[r][c],
            _ => 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_total(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn col_total(&self, j: usize) -> u64 {
        self.counts.iter().map(|r| r[j]).sum()
    }

    /// Fraction of samples on the diagonal.
    pub fn accuracy(&self) -> Result<f64> {
        let total = self.total();
        if total == 0 {
            return Err(CoreError::Empty("confusion matrix"));
        }
        Ok(self.trace() as f64 / total as f64)
    }

    /// CSV with a header row of classifier labels and one row per expert
    /// label.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("expert\\classifier");
        for c in &self.classes {
            out.push(',');
            out.push_str(c.as_str());
        }
        out.push('\n');
        for (label, row) in self.classes.iter().zip(&self.counts) {
            out.push_str(label.as_str());
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Tally predictions against truths over the task's classes.
pub fn confusion(preds: &[ClassLabel], truths: &[ClassLabel], task: Task) -> Result<ConfusionMatrix> {
    if preds.len() != truths.len() {
        return Err(CoreError::LengthMismatch {
            left: preds.len(),
            right: truths.len(),
        });
    }
    let mut cm = ConfusionMatrix::empty(task.classes());
    for (&p, &t) in preds.iter().zip(truths) {
        let lookup = |l: ClassLabel| {
            task.index_of(l).ok_or_else(|| CoreError::LabelTaskMismatch {
                label: l.to_string(),
                context: format!("task {task:?}"),
            })
        };
        cm.counts[lookup(t)?][lookup(p)?] += 1;
    }
    Ok(cm)
}
