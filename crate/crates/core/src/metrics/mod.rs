//! Confusion matrices, accuracy, weighted accuracy, precision/recall/F1,
//! AUROC and group voting.

mod auroc;
mod confusion;
mod scores;
mod vote;

pub use auroc::{auroc, binary_auc, Auroc};
pub use confusion::{confusion, ConfusionMatrix};
pub use scores::{
    precision_recall_f1, weighted_accuracy, weighted_accuracy_with, ClassScores, Grouping,
    PrecisionRecallF1, MURMUR_WEIGHTS,
};
pub use vote::vote;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::label::{ClassLabel, Task};

/// Every reported metric for one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub task: Task,
    pub samples: u64,
    pub accuracy: f64,
    /// Only defined for the three-class murmur task.
    pub weighted_accuracy: Option<f64>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// Absent when no probabilities are available (e.g. after voting).
    pub auroc: Option<f64>,
    pub per_class: Vec<ClassScores>,
    pub confusion: ConfusionMatrix,
}

impl MetricReport {
    /// `probabilities[i]` follows the task's class order.
    pub fn compute(
        task: Task,
        preds: &[ClassLabel],
        truths: &[ClassLabel],
        probabilities: Option<&[Vec<f64>]>,
    ) -> Result<Self> {
        let cm = confusion(preds, truths, task)?;
        let prf = precision_recall_f1(&cm)?;
        let auroc = match probabilities {
            Some(p) => {
                let truth_idx: Vec<usize> = truths.iter().map(|&t| task.index_of(t).unwrap()).collect();
                auroc(p, &truth_idx, task.num_classes()).ok().map(|a| a.macro_auc)
            }
            None => None,
        };
        Ok(Self {
            task,
            samples: cm.total(),
            accuracy: cm.accuracy()?,
            weighted_accuracy: if task == Task::Murmur {
                Some(weighted_accuracy(&cm)?)
            } else {
                None
            },
            macro_precision: prf.macro_precision,
            macro_recall: prf.macro_recall,
            macro_f1: prf.macro_f1,
            auroc,
            per_class: prf.per_class,
            confusion: cm,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ClassLabel::*;

    #[test]
    fn report_on_small_case() {
        let truths = [Present, Present, Unknown, Absent, Absent];
        let preds = [Present, Absent, Unknown, Absent, Absent];
        let probs = vec![
            vec![0.8, 0.1, 0.1],
            vec![0.3, 0.1, 0.6],
            vec![0.1, 0.8, 0.1],
            vec![0.1, 0.1, 0.8],
            vec![0.2, 0.2, 0.6],
        ];
        let r = MetricReport::compute(Task::Murmur, &preds, &truths, Some(&probs)).unwrap();
        assert_eq!(r.samples, 5);
        assert!((r.accuracy - 0.8).abs() < 1e-15);
        assert!((r.weighted_accuracy.unwrap() - (5.0 + 3.0 + 2.0) / (10.0 + 3.0 + 2.0)).abs() < 1e-15);
        assert!(r.auroc.unwrap() > 0.9);
        let json = r.to_json();
        let back: MetricReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn binary_task_has_no_weighted_accuracy() {
        let r = MetricReport::compute(Task::Abnormality, &[Normal, Abnormal], &[Normal, Normal], None).unwrap();
        assert_eq!(r.weighted_accuracy, None);
        assert_eq!(r.auroc, None);
        assert_eq!(r.confusion.counts, vec![vec![1, 1], vec![0, 0]]);
    }
}
