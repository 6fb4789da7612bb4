//! Confusion-matrix metrics, ROC/AUC and the cross-validation harness.
//!
//! The positive class is [`Label::Abusive`] throughout.

mod cv;
mod roc;

pub use cv::{cross_validate, CvReport, CvRequest, FoldResult, RocExport, CV_REPORT_SCHEMA_VERSION};
pub use roc::{roc_auc, RocCurve};

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

/// TP/FP/TN/FN counts with `Abusive` as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn new(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Merge counts from another matrix (used to pool folds).
    pub fn merge(&mut self, other: &ConfusionMatrix) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }
}

/// Threshold metrics computed from a confusion matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub f1: f64,
}

/// Tally a confusion matrix from parallel truth/prediction lists.
pub fn confusion(truth: &[Label], predictions: &[Label]) -> Result<ConfusionMatrix> {
    if truth.len() != predictions.len() {
        return Err(Error::LengthMismatch {
            truth: truth.len(),
            predictions: predictions.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::EmptyInput {
            context: "confusion".into(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in truth.iter().zip(predictions) {
        match (t, p) {
            (Label::Abusive, Label::Abusive) => cm.tp += 1,
            (Label::Abusive, Label::NonAbusive) => cm.fn_ += 1,
            (Label::NonAbusive, Label::Abusive) => cm.fp += 1,
            (Label::NonAbusive, Label::NonAbusive) => cm.tn += 1,
        }
    }
    Ok(cm)
}

/// Precision, recall, accuracy and F1 from counts.
///
/// Zero-denominator rule: precision (or recall) is 0 when its denominator
/// is 0, and F1 is 0 when precision + recall is 0.
pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    if cm.total() == 0 {
        return Err(Error::EmptyInput {
            context: "metrics".into(),
        });
    }
    let tp = cm.tp as f64;
    let precision = if cm.tp + cm.fp == 0 {
        0.0
    } else {
        tp / (cm.tp + cm.fp) as f64
    };
    let recall = if cm.tp + cm.fn_ == 0 {
        0.0
    } else {
        tp / (cm.tp + cm.fn_) as f64
    };
    let accuracy = (cm.tp + cm.tn) as f64 / cm.total() as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(Metrics {
        precision,
        recall,
        accuracy,
        f1,
    })
}

/// One model/feature pairing's scores plus timing for a fold (or an average).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub auc: f64,
    pub train_seconds: f64,
    pub predict_seconds: f64,
}

impl MetricsReport {
    pub fn new(m: Metrics, auc: f64, train_seconds: f64, predict_seconds: f64) -> Self {
        Self {
            precision: m.precision,
            recall: m.recall,
            accuracy: m.accuracy,
            f1: m.f1,
            auc,
            train_seconds,
            predict_seconds,
        }
    }

    /// F1 must be the harmonic mean of the stored precision and recall.
    pub fn validate(&self) -> Result<()> {
        let expected = if self.precision + self.recall == 0.0 {
            0.0
        } else {
            2.0 * self.precision * self.recall / (self.precision + self.recall)
        };
        if (self.f1 - expected).abs() > 1e-9 {
            return Err(Error::InvalidConfig {
                message: format!(
                    "f1 {} inconsistent with precision/recall harmonic mean {}",
                    self.f1, expected
                ),
            });
        }
        for v in [self.precision, self.recall, self.accuracy, self.f1, self.auc] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig {
                    message: format!("metric value {v} outside [0, 1]"),
                });
            }
        }
        if self.train_seconds < 0.0 || self.predict_seconds < 0.0 {
            return Err(Error::InvalidConfig {
                message: "negative timing".into(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn round3(x: f64) -> f64 {
        (x * 1000.0).round() / 1000.0
    }

    #[test]
    fn confusion_two_correct() {
        let cm = confusion(
            &[Label::Abusive, Label::NonAbusive],
            &[Label::Abusive, Label::NonAbusive],
        )
        .unwrap();
        assert_eq!(cm, ConfusionMatrix::new(1, 0, 1, 0));
    }

    #[test]
    fn confusion_missed_positive() {
        let cm = confusion(&[Label::Abusive], &[Label::NonAbusive]).unwrap();
        assert_eq!(cm.fn_, 1);
        assert_eq!(cm.total(), 1);
    }

    #[test]
    fn confusion_matches_brute_force_tally() {
        // Exhaustive tally oracle over a pseudo-random 50-sample list.
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        let truth: Vec<Label> = (0..50)
            .map(|_| if next() % 2 == 0 { Label::Abusive } else { Label::NonAbusive })
            .collect();
        let pred: Vec<Label> = (0..50)
            .map(|_| if next() % 3 == 0 { Label::Abusive } else { Label::NonAbusive })
            .collect();

        let mut tp = 0;
        let mut fp = 0;
        let mut tn = 0;
        let mut fn_ = 0;
        for i in 0..50 {
            match (truth[i], pred[i]) {
                (Label::Abusive, Label::Abusive) => tp += 1,
                (Label::NonAbusive, Label::Abusive) => fp += 1,
                (Label::NonAbusive, Label::NonAbusive) => tn += 1,
                (Label::Abusive, Label::NonAbusive) => fn_ += 1,
            }
        }
        let cm = confusion(&truth, &pred).unwrap();
        assert_eq!(cm, ConfusionMatrix::new(tp, fp, tn, fn_));
        assert_eq!(cm.total(), 50);
    }

    #[test]
    fn confusion_length_mismatch_is_fatal() {
        let err = confusion(&[Label::Abusive], &[]).unwrap_err();
        assert!(matches!(err, Error::LengthMismatch { .. }));
    }

    #[test]
    fn metrics_on_reported_hybrid_counts() {
        let cm = ConfusionMatrix::new(15_307, 138, 54_305, 217);
        let m = metrics(&cm).unwrap();
        assert_eq!(round3(m.precision), 0.991);
        assert_eq!(round3(m.recall), 0.986);
        assert_eq!(round3(m.accuracy), 0.995);
        assert_eq!(round3(m.f1), 0.989);
    }

    #[test]
    fn metrics_perfect_classifier() {
        let m = metrics(&ConfusionMatrix::new(7, 0, 0, 0)).unwrap();
        assert_eq!(m.precision, 1.0);
        assert_eq!(m.recall, 1.0);
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.f1, 1.0);
    }

    #[test]
    fn metrics_zero_rule() {
        let m = metrics(&ConfusionMatrix::new(0, 0, 3, 4)).unwrap();
        assert_eq!(m.precision, 0.0);
        assert_eq!(m.recall, 0.0);
        assert_eq!(m.f1, 0.0);
        assert_abs_diff_eq!(m.accuracy, 3.0 / 7.0, epsilon = 1e-12);
    }

    #[test]
    fn adding_correct_positive_never_decreases_recall_or_accuracy() {
        for tp in 0..4usize {
            for fp in 0..4usize {
                for tn in 0..4usize {
                    for fn_ in 0..4usize {
                        if tp + fp + tn + fn_ == 0 {
                            continue;
                        }
                        let before = metrics(&ConfusionMatrix::new(tp, fp, tn, fn_)).unwrap();
                        let after = metrics(&ConfusionMatrix::new(tp + 1, fp, tn, fn_)).unwrap();
                        assert!(after.recall >= before.recall - 1e-12);
                        assert!(after.accuracy >= before.accuracy - 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn report_validation_checks_harmonic_mean() {
        let m = metrics(&ConfusionMatrix::new(3, 1, 5, 2)).unwrap();
        let report = MetricsReport::new(m, 0.9, 1.0, 0.1);
        report.validate().unwrap();

        let mut broken = report;
        broken.f1 += 1e-6;
        assert!(broken.validate().is_err());
    }
}
