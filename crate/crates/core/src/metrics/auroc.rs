use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Auroc {
    /// Unweighted mean over classes that have both positives and negatives.
    pub macro_auc: f64,
    /// One-vs-rest AUC per class; `None` when the class could not be scored.
    pub per_class: Vec<Option<f64>>,
}

/// Area under the ROC curve of `scores` for binary `positive` flags via the
/// Mann-Whitney rank statistic with mid-ranks for ties.
pub fn binary_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Twice the rank sum keeps mid-ranks integral.
    let mut twice_rank_sum: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks are 1-based: i + 1 ..= j + 1, mean doubled = i + j + 2.
        let twice_mid = (i + j + 2) as u64;
        twice_rank_sum += twice_mid * order[i..=j].iter().filter(|&&k| positive[k]).count() as u64;
        i = j + 1;
    }
    let twice_u = twice_rank_sum - (n_pos * (n_pos + 1)) as u64;
    Some(twice_u as f64 / (2 * n_pos * n_neg) as f64)
}

/// Macro one-vs-rest AUROC. `scores[i][c]` is the probability of class `c`
/// for sample `i`; `truths[i]` is a class index.
pub fn auroc(scores: &[Vec<f64>], truths: &[usize], n_classes: usize) -> Result<Auroc> {
    if scores.len() != truths.len() {
        return Err(CoreError::LengthMismatch {
            left: scores.len(),
            right: truths.len(),
        });
    }
    if let Some(&bad) = truths.iter().find(|&&t| t >= n_classes) {
        return Err(CoreError::InvalidParameter(format!("class index {bad} out of range")));
    }
    if scores.iter().any(|row| row.len() != n_classes) {
        return Err(CoreError::InvalidParameter("score rows must have one entry per class".into()));
    }
    let per_class: Vec<Option<f64>> = (0..n_classes)
        .map(|c| {
            let column: Vec<f64> = scores.iter().map(|row| row[c]).collect();
            let positive: Vec<bool> = truths.iter().map(|&t| t == c).collect();
            let auc = binary_auc(&column, &positive);
            if auc.is_none() {
                log::warn!("class {c} lacks positives or negatives; skipped in AUROC");
            }
            auc
        })
        .collect();
    let scored: Vec<f64> = per_class.iter().flatten().copied().collect();
    if scored.is_empty() {
        return Err(CoreError::Empty("no class has both positives and negatives"));
    }
    Ok(Auroc {
        macro_auc: scored.iter().sum::<f64>() / scored.len() as f64,
        per_class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair_count_oracle(scores: &[f64], positive: &[bool]) -> f64 {
        let mut num = 0.0;
        let mut pairs = 0.0;
        for (i, &pi) in positive.iter().enumerate() {
            for (j, &pj) in positive.iter().enumerate() {
                if pi && !pj {
                    pairs += 1.0;
                    num += if scores[i] > scores[j] {
                        1.0
                    } else if scores[i] == scores[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        num / pairs
    }

    #[test]
    fn perfect_separation_and_all_ties() {
        assert_eq!(binary_auc(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]), Some(1.0));
        assert_eq!(binary_auc(&[0.5; 6], &[true, false, true, false, false, true]), Some(0.5));
        assert_eq!(binary_auc(&[0.1, 0.2], &[true, true]), None);
    }

    #[test]
    fn macro_skips_missing_class() {
        let scores = vec![vec![0.9, 0.05, 0.05], vec![0.2, 0.1, 0.7], vec![0.6, 0.2, 0.2]];
        let a = auroc(&scores, &[0, 2, 0], 3).unwrap();
        assert_eq!(a.per_class[1], None);
        assert_eq!(a.per_class[0], Some(1.0));
        assert_eq!(a.macro_auc, 1.0);
        assert!(auroc(&scores, &[0, 5, 0], 3).is_err());
    }

    proptest! {
        #[test]
        fn rank_statistic_equals_pair_counting(
            scores in prop::collection::vec(0u8..8, 20),
            positive in prop::collection::vec(any::<bool>(), 20),
        ) {
            let scores: Vec<f64> = scores.iter().map(|&s| s as f64 / 8.0).collect();
            if let Some(auc) = binary_auc(&scores, &positive) {
                prop_assert!((auc - pair_count_oracle(&scores, &positive)).abs() < 1e-12);
            }
        }

        #[test]
        fn invariant_under_monotone_transform(
            scores in prop::collection::vec(0.0f64..1.0, 30),
            positive in prop::collection::vec(any::<bool>(), 30),
        ) {
            let warped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
            prop_assert_eq!(binary_auc(&scores, &positive), binary_auc(&warped, &positive));
        }
    }
}
