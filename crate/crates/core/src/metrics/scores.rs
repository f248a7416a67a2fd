use serde::{Deserialize, Serialize};

use super::confusion::ConfusionMatrix;
use crate::error::{CoreError, Result};
use crate::label::{ClassLabel, Task};

/// Which marginal the weighted-accuracy denominator sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    /// Per-class expert (true-label) totals.
    #[default]
    ExpertRows,
    /// Per-class classifier (predicted-label) totals.
    ClassifierColumns,
}

/// Murmur weights: Present 5, Unknown 3, Absent 1.
pub const MURMUR_WEIGHTS: [(ClassLabel, f64); 3] = [
    (ClassLabel::Present, 5.0),
    (ClassLabel::Unknown, 3.0),
    (ClassLabel::Absent, 1.0),
];

/// `sum_c w_c m_cc / sum_c w_c n_c` with `n_c` taken from `grouping`.
pub fn weighted_accuracy_with(cm: &ConfusionMatrix, weights: &[(ClassLabel, f64)], grouping: Grouping) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for &(label, w) in weights {
        let i = cm.index_of(label).ok_or_else(|| CoreError::LabelTaskMismatch {
            label: label.to_string(),
            context: "weighted accuracy matrix".into(),
        })?;
        num += w * cm.counts[i][i] as f64;
        den += w * match grouping {
            Grouping::ExpertRows => cm.row_total(i),
            Grouping::ClassifierColumns => cm.col_total(i),
        } as f64;
    }
    if den == 0.0 {
        return Err(CoreError::Empty("confusion matrix"));
    }
    Ok(num / den)
}

/// Murmur weighted accuracy with expert-row grouping.
pub fn weighted_accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    if cm.classes != Task::Murmur.classes() {
        return Err(CoreError::InvalidParameter(
            "weighted accuracy needs the 3-class murmur matrix".into(),
        ));
    }
    weighted_accuracy_with(cm, &MURMUR_WEIGHTS, Grouping::ExpertRows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub label: ClassLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecallF1 {
    pub per_class: Vec<ClassScores>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// One-vs-rest precision, recall and F1 per class, and their unweighted
/// means. Undefined ratios count as 0.
pub fn precision_recall_f1(cm: &ConfusionMatrix) -> Result<PrecisionRecallF1> {
    if cm.total() == 0 {
        return Err(CoreError::Empty("confusion matrix"));
    }
    let per_class: Vec<ClassScores> = cm
        .classes
        .iter()
        .enumerate()
        .map(|(i, &label)| {
            let tp = cm.counts[i][i];
            let precision = ratio(tp, cm.col_total(i));
            let recall = ratio(tp, cm.row_total(i));
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassScores {
                label,
                precision,
                recall,
                f1,
                support: cm.row_total(i),
            }
        })
        .collect();
    let n = per_class.len() as f64;
    Ok(PrecisionRecallF1 {
        macro_precision: per_class.iter().map(|c| c.precision).sum::<f64>() / n,
        macro_recall: per_class.iter().map(|c| c.recall).sum::<f64>() / n,
        macro_f1: per_class.iter().map(|c| c.f1).sum::<f64>() / n,
        per_class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ClassLabel::*;

    fn murmur(counts: [[u64; 3]; 3]) -> ConfusionMatrix {
        ConfusionMatrix::from_counts(Task::Murmur.classes(), counts.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn perfect_classifier() {
        let cm = murmur([[10, 0, 0], [0, 4, 0], [0, 0, 30]]);
        assert_eq!(weighted_accuracy(&cm).unwrap(), 1.0);
        let prf = precision_recall_f1(&cm).unwrap();
        assert_eq!((prf.macro_precision, prf.macro_recall, prf.macro_f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn everything_predicted_absent_with_e1_test_mix() {
        // Present 38%, Unknown 11.5%, Absent 50.5% of 1000 test segments.
        let cm = murmur([[0, 0, 380], [0, 0, 115], [0, 0, 505]]);
        let aw = weighted_accuracy(&cm).unwrap();
        assert_eq!(aw, 505.0 / (5.0 * 380.0 + 3.0 * 115.0 + 505.0));
        assert!((aw - 0.1836).abs() < 5e-5);
    }

    #[test]
    fn unit_weights_reduce_to_accuracy() {
        let cm = murmur([[7, 2, 1], [3, 5, 2], [4, 1, 9]]);
        let ones = [(Present, 1.0), (Unknown, 1.0), (Absent, 1.0)];
        for g in [Grouping::ExpertRows, Grouping::ClassifierColumns] {
            assert!((weighted_accuracy_with(&cm, &ones, g).unwrap() - cm.accuracy().unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn column_grouping_differs_from_rows() {
        let cm = murmur([[7, 2, 1], [3, 5, 2], [4, 1, 9]]);
        let rows = weighted_accuracy_with(&cm, &MURMUR_WEIGHTS, Grouping::ExpertRows).unwrap();
        let cols = weighted_accuracy_with(&cm, &MURMUR_WEIGHTS, Grouping::ClassifierColumns).unwrap();
        assert!((rows - (35.0 + 15.0 + 9.0) / (50.0 + 30.0 + 14.0)).abs() < 1e-15);
        assert!((cols - (35.0 + 15.0 + 9.0) / (70.0 + 24.0 + 12.0)).abs() < 1e-15);
    }

    #[test]
    fn binary_matrix_is_rejected_for_weighted_accuracy() {
        let cm = ConfusionMatrix::from_counts(Task::MurmurBinary.classes(), vec![vec![1, 0], vec![0, 1]]).unwrap();
        assert!(weighted_accuracy(&cm).is_err());
        assert!(weighted_accuracy(&murmur([[0; 3]; 3])).is_err());
    }

    #[test]
    fn equal_precision_and_recall_give_that_f1() {
        // Present: tp 6, fp 2, fn 2.
        let cm = murmur([[6, 1, 1], [1, 3, 0], [1, 0, 5]]);
        let prf = precision_recall_f1(&cm).unwrap();
        let present = &prf.per_class[0];
        assert_eq!(present.precision, present.recall);
        assert!((present.f1 - present.precision).abs() < 1e-15);
    }

    #[test]
    fn never_predicted_class_scores_zero() {
        let cm = murmur([[5, 0, 1], [2, 0, 2], [1, 0, 6]]);
        let prf = precision_recall_f1(&cm).unwrap();
        let unknown = &prf.per_class[1];
        assert_eq!((unknown.precision, unknown.recall, unknown.f1), (0.0, 0.0, 0.0));
        assert!(prf.per_class.iter().all(|c| (0.0..=1.0).contains(&c.f1)));
    }
}
