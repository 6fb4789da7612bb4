//! ROC curves and AUC.
//!
//! AUC here is exactly the Mann–Whitney statistic: the probability that a
//! random positive outscores a random negative, ties counted half. The
//! curve construction groups tied scores into single segments, which makes
//! trapezoidal integration agree with pair counting.

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

/// An ROC curve: thresholds descending from +inf, with parallel FPR/TPR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub thresholds: Vec<f64>,
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
}

impl RocCurve {
    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    /// Endpoints (0,0) and (1,1) present, FPR non-decreasing.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if n < 2 || self.fpr.len() != n || self.tpr.len() != n {
            return Err(Error::InvalidConfig {
                message: "roc curve needs at least the two endpoints".into(),
            });
        }
        if self.fpr[0] != 0.0 || self.tpr[0] != 0.0 {
            return Err(Error::InvalidConfig {
                message: "roc curve must start at (0, 0)".into(),
            });
        }
        if self.fpr[n - 1] != 1.0 || self.tpr[n - 1] != 1.0 {
            return Err(Error::InvalidConfig {
                message: "roc curve must end at (1, 1)".into(),
            });
        }
        if self.fpr.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidConfig {
                message: "roc fpr must be non-decreasing".into(),
            });
        }
        Ok(())
    }

    /// Trapezoidal area under the curve.
    pub fn trapezoid_auc(&self) -> f64 {
        let mut auc = 0.0;
        for i in 1..self.len() {
            auc += (self.fpr[i] - self.fpr[i - 1]) * (self.tpr[i] + self.tpr[i - 1]) / 2.0;
        }
        auc
    }
}

/// Build the ROC curve for `scores` (higher = more abusive) and return it
/// with its AUC.
pub fn roc_auc(truth: &[Label], scores: &[f64]) -> Result<(RocCurve, f64)> {
    if truth.len() != scores.len() {
        return Err(Error::LengthMismatch {
            truth: truth.len(),
            predictions: scores.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite {
            context: "roc scores".into(),
        });
    }
    let positives = truth.iter().filter(|&&l| l == Label::Abusive).count();
    let negatives = truth.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClassTruth {
            context: "roc_auc".into(),
        });
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    // Descending by score; index tiebreak keeps the sort total.
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap()
            .then(a.cmp(&b))
    });

    let p = positives as f64;
    let n = negatives as f64;
    let mut thresholds = vec![f64::INFINITY];
    let mut fpr = vec![0.0];
    let mut tpr = vec![0.0];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let score = scores[order[i]];
        // Consume the whole tie group so ties become one diagonal segment.
        while i < order.len() && scores[order[i]] == score {
            match truth[order[i]] {
                Label::Abusive => tp += 1,
                Label::NonAbusive => fp += 1,
            }
            i += 1;
        }
        thresholds.push(score);
        fpr.push(fp as f64 / n);
        tpr.push(tp as f64 / p);
    }

    let curve = RocCurve {
        thresholds,
        fpr,
        tpr,
    };
    let auc = curve.trapezoid_auc();
    Ok((curve, auc))
}

/// Pair-counting AUC: fraction of positive/negative pairs where the
/// positive outscores the negative, ties counted half. O(P*N); the
/// independent oracle for [`roc_auc`].
pub fn pair_counting_auc(truth: &[Label], scores: &[f64]) -> Result<f64> {
    let pos: Vec<f64> = truth
        .iter()
        .zip(scores)
        .filter(|(&l, _)| l == Label::Abusive)
        .map(|(_, &s)| s)
        .collect();
    let neg: Vec<f64> = truth
        .iter()
        .zip(scores)
        .filter(|(&l, _)| l == Label::NonAbusive)
        .map(|(_, &s)| s)
        .collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClassTruth {
            context: "pair_counting_auc".into(),
        });
    }
    let mut wins = 0.0;
    for &sp in &pos {
        for &sn in &neg {
            if sp > sn {
                wins += 1.0;
            } else if sp == sn {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (pos.len() * neg.len()) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const A: Label = Label::Abusive;
    const N: Label = Label::NonAbusive;

    #[test]
    fn perfectly_separating_scores() {
        let (curve, auc) = roc_auc(&[A, A, N, N], &[0.9, 0.8, 0.2, 0.1]).unwrap();
        curve.validate().unwrap();
        assert_abs_diff_eq!(auc, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn interleaved_two_plus_two() {
        // N:0.1, P:0.2, N:0.3, P:0.4 — of the 4 positive/negative pairs,
        // 3 have the positive on top: AUC = 0.75.
        let (curve, auc) = roc_auc(&[N, A, N, A], &[0.1, 0.2, 0.3, 0.4]).unwrap();
        curve.validate().unwrap();
        assert_abs_diff_eq!(auc, 0.75, epsilon = 1e-12);
        let oracle = pair_counting_auc(&[N, A, N, A], &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_abs_diff_eq!(auc, oracle, epsilon = 1e-12);
    }

    #[test]
    fn all_ties_is_half() {
        let (curve, auc) = roc_auc(&[A, N, A, N, N], &[0.5; 5]).unwrap();
        curve.validate().unwrap();
        assert_abs_diff_eq!(auc, 0.5, epsilon = 1e-12);
        // One diagonal segment plus the origin.
        assert_eq!(curve.len(), 2);
    }

    #[test]
    fn single_class_truth_is_fatal() {
        assert!(matches!(
            roc_auc(&[A, A], &[0.1, 0.2]),
            Err(Error::SingleClassTruth { .. })
        ));
    }

    #[test]
    fn curve_starts_at_infinity_threshold() {
        let (curve, _) = roc_auc(&[A, N], &[0.7, 0.3]).unwrap();
        assert!(curve.thresholds[0].is_infinite());
        assert_eq!((curve.fpr[0], curve.tpr[0]), (0.0, 0.0));
        assert_eq!(
            (curve.fpr[curve.len() - 1], curve.tpr[curve.len() - 1]),
            (1.0, 1.0)
        );
    }

    #[test]
    fn trapezoid_matches_pair_counting_on_random_lists() {
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..200 {
            let len = 2 + (next() % 30) as usize;
            let truth: Vec<Label> = (0..len).map(|_| if next() % 2 == 0 { A } else { N }).collect();
            if truth.iter().all(|&l| l == A) || truth.iter().all(|&l| l == N) {
                continue;
            }
            // Coarse buckets force plenty of ties.
            let scores: Vec<f64> = (0..len).map(|_| (next() % 5) as f64 / 4.0).collect();
            let (curve, auc) = roc_auc(&truth, &scores).unwrap();
            curve.validate().unwrap();
            let oracle = pair_counting_auc(&truth, &scores).unwrap();
            assert_abs_diff_eq!(auc, oracle, epsilon = 1e-9);
        }
    }
}
