//! Evaluation metrics for the three task formulations.
//!
//! Conventions, fixed here and relied on by the evaluation harness:
//! - any 0/0 ratio evaluates to 0 (shared-task scorer convention; class-wise
//!   F1 can legitimately be exactly 0.0000),
//! - binary detection reports macro-averaged precision/recall/F1 over both
//!   classes next to the positive-class F1 the ranking uses,
//! - the multi-label task reports one positive-class F1 per label column and
//!   their unweighted mean,
//! - pair selection reports accuracy, with index 1 treated as the positive
//!   class for the remaining fields.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::tasks::{MultiLabelPrediction, PairDecision};

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("label vectors have different lengths: {truth} vs {pred}")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("cannot compute metrics over an empty input")]
    Empty,
    #[error("pair index {value} at position {position} is outside {{0, 1}}")]
    InvalidIndex { value: u8, position: usize },
}

/// Binary confusion cells. `fn_` is the false-negative count (`fn` is a
/// keyword).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// The same counts with the positive and negative classes exchanged.
    pub fn swapped(&self) -> ConfusionCounts {
        ConfusionCounts {
            tp: self.tn,
            fp: self.fn_,
            tn: self.tp,
            fn_: self.fp,
        }
    }
}

/// Everything the organizers score, in one record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub f1_positive: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_class_f1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub macro_f1: Option<f64>,
    pub n: usize,
}

impl EvalReport {
    /// Flat key-value rendering, four fractional digits per metric.
    pub fn to_kv_text(&self) -> String {
        use core::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "precision {:.4}", self.precision);
        let _ = writeln!(out, "recall {:.4}", self.recall);
        let _ = writeln!(out, "f1 {:.4}", self.f1);
        let _ = writeln!(out, "accuracy {:.4}", self.accuracy);
        let _ = writeln!(out, "f1_positive {:.4}", self.f1_positive);
        if let Some(per_class) = &self.per_class_f1 {
            for (label, value) in crate::corpus::CategoryLabel::ALL.iter().zip(per_class) {
                let _ = writeln!(out, "f1_{} {:.4}", label.name(), value);
            }
        }
        if let Some(macro_f1) = self.macro_f1 {
            let _ = writeln!(out, "macro_f1 {:.4}", macro_f1);
        }
        let _ = writeln!(out, "n {}", self.n);
        out
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn confusion(y_true: &[bool], y_pred: &[bool]) -> Result<ConfusionCounts, MetricError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricError::LengthMismatch {
            truth: y_true.len(),
            pred: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut counts = ConfusionCounts {
        tp: 0,
        fp: 0,
        tn: 0,
        fn_: 0,
    };
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (true, true) => counts.tp += 1,
            (false, true) => counts.fp += 1,
            (false, false) => counts.tn += 1,
            (true, false) => counts.fn_ += 1,
        }
    }
    Ok(counts)
}

/// Precision, recall, and F1 of the positive class; 0/0 yields 0.
pub fn prf1(counts: &ConfusionCounts) -> (f64, f64, f64) {
    let precision = ratio(counts.tp as f64, (counts.tp + counts.fp) as f64);
    let recall = ratio(counts.tp as f64, (counts.tp + counts.fn_) as f64);
    let f1 = ratio(2.0 * precision * recall, precision + recall);
    (precision, recall, f1)
}

/// Unweighted mean of per-class F1 values.
pub fn macro_f1(per_class_f1: &[f64]) -> Result<f64, MetricError> {
    if per_class_f1.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(per_class_f1.iter().sum::<f64>() / per_class_f1.len() as f64)
}

/// Binary-detection report: macro P/R/F1 over both classes, accuracy, and
/// the positive-class F1 used for ranking.
pub fn evaluate_task_a(y_true: &[bool], y_pred: &[bool]) -> Result<EvalReport, MetricError> {
    let counts = confusion(y_true, y_pred)?;
    Ok(report_from_counts(&counts))
}

pub(crate) fn report_from_counts(counts: &ConfusionCounts) -> EvalReport {
    let (pos_p, pos_r, pos_f1) = prf1(counts);
    let (neg_p, neg_r, neg_f1) = prf1(&counts.swapped());
    let accuracy = ratio((counts.tp + counts.tn) as f64, counts.total() as f64);
    EvalReport {
        precision: (pos_p + neg_p) / 2.0,
        recall: (pos_r + neg_r) / 2.0,
        f1: (pos_f1 + neg_f1) / 2.0,
        accuracy,
        f1_positive: pos_f1,
        per_class_f1: None,
        macro_f1: None,
        n: counts.total() as usize,
    }
}

/// Multi-label report: one positive-class F1 per label column in the fixed
/// label order, plus their mean. The headline binary fields are computed
/// over the pooled (micro) confusion counts of all six columns.
pub fn evaluate_task_b(
    true_flags: &[MultiLabelPrediction],
    pred_flags: &[MultiLabelPrediction],
) -> Result<EvalReport, MetricError> {
    if true_flags.len() != pred_flags.len() {
        return Err(MetricError::LengthMismatch {
            truth: true_flags.len(),
            pred: pred_flags.len(),
        });
    }
    if true_flags.is_empty() {
        return Err(MetricError::Empty);
    }

    let mut per_class = Vec::with_capacity(crate::corpus::CategoryLabel::ALL.len());
    let mut pooled = ConfusionCounts {
        tp: 0,
        fp: 0,
        tn: 0,
        fn_: 0,
    };
    for label in crate::corpus::CategoryLabel::ALL {
        let truth: Vec<bool> = true_flags.iter().map(|m| m.flags.get(label)).collect();
        let pred: Vec<bool> = pred_flags.iter().map(|m| m.flags.get(label)).collect();
        let counts = confusion(&truth, &pred)?;
        pooled.tp += counts.tp;
        pooled.fp += counts.fp;
        pooled.tn += counts.tn;
        pooled.fn_ += counts.fn_;
        let (_, _, f1) = prf1(&counts);
        per_class.push(f1);
    }

    let macro_value = macro_f1(&per_class)?;
    let mut report = report_from_counts(&pooled);
    report.per_class_f1 = Some(per_class);
    report.macro_f1 = Some(macro_value);
    report.n = true_flags.len();
    Ok(report)
}

/// Pair-selection report from full decisions.
pub fn evaluate_task_c(
    true_indices: &[u8],
    decisions: &[PairDecision],
) -> Result<EvalReport, MetricError> {
    let chosen: Vec<u8> = decisions.iter().map(|d| d.chosen_index).collect();
    evaluate_task_c_indices(true_indices, &chosen)
}

/// Pair-selection report from bare indices (the on-disk submission form).
/// Accuracy is the fraction of matching indices; the remaining fields treat
/// index 1 as the positive class.
pub fn evaluate_task_c_indices(
    true_indices: &[u8],
    chosen_indices: &[u8],
) -> Result<EvalReport, MetricError> {
    for (position, &value) in true_indices.iter().chain(chosen_indices).enumerate() {
        if value > 1 {
            let position = position % true_indices.len().max(1);
            return Err(MetricError::InvalidIndex { value, position });
        }
    }
    let truth: Vec<bool> = true_indices.iter().map(|&i| i == 1).collect();
    let pred: Vec<bool> = chosen_indices.iter().map(|&i| i == 1).collect();
    evaluate_task_a(&truth, &pred)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn confusion_hand_count() {
        let c = confusion(&[true, true, false, false], &[true, false, false, true]).unwrap();
        assert_eq!(
            c,
            ConfusionCounts {
                tp: 1,
                fp: 1,
                tn: 1,
                fn_: 1
            }
        );
    }

    #[test]
    fn confusion_identical_vectors() {
        let v = [true, false, true];
        let c = confusion(&v, &v).unwrap();
        assert_eq!(c.fp, 0);
        assert_eq!(c.fn_, 0);
    }

    #[test]
    fn confusion_length_mismatch() {
        let err = confusion(&[true; 3], &[false; 4]).unwrap_err();
        assert!(matches!(
            err,
            MetricError::LengthMismatch { truth: 3, pred: 4 }
        ));
        assert!(confusion(&[], &[]).is_err());
    }

    #[test]
    fn prf1_hand_arithmetic() {
        let c = ConfusionCounts {
            tp: 1,
            fp: 1,
            tn: 0,
            fn_: 1,
        };
        assert_eq!(prf1(&c), (0.5, 0.5, 0.5));
    }

    #[test]
    fn prf1_zero_division_convention() {
        let c = ConfusionCounts {
            tp: 0,
            fp: 0,
            tn: 0,
            fn_: 5,
        };
        assert_eq!(prf1(&c), (0.0, 0.0, 0.0));
    }

    #[test]
    fn macro_f1_reported_value() {
        // Class-wise F1 column of the multi-label results table.
        let per_class = [0.2294, 0.0963, 0.0833, 0.0, 0.0, 0.0414];
        let value = macro_f1(&per_class).unwrap();
        assert!((value - 0.0751).abs() < 5e-4, "got {value}");
    }

    #[test]
    fn macro_f1_edges() {
        assert_eq!(macro_f1(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(macro_f1(&[0.5]).unwrap(), 0.5);
        assert!(macro_f1(&[]).is_err());
    }

    #[test]
    fn task_a_perfect_predictions() {
        let v = [true, false, true, false];
        let report = evaluate_task_a(&v, &v).unwrap();
        assert_eq!(report.precision, 1.0);
        assert_eq!(report.recall, 1.0);
        assert_eq!(report.f1, 1.0);
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.f1_positive, 1.0);
    }

    #[test]
    fn task_a_all_negative_predictions() {
        let report = evaluate_task_a(&[true, false, true], &[false, false, false]).unwrap();
        assert_eq!(report.f1_positive, 0.0);
    }

    #[test]
    fn task_b_perfect_and_zero_columns() {
        use crate::corpus::CategoryFlags;
        let truth = vec![
            MultiLabelPrediction::from_flags(CategoryFlags::only(
                crate::corpus::CategoryLabel::Irony,
            )),
            MultiLabelPrediction::from_flags(CategoryFlags::default()),
        ];
        let report = evaluate_task_b(&truth, &truth).unwrap();
        let per_class = report.per_class_f1.as_ref().unwrap();
        // Perfect irony column; columns with no positives hit 0/0 -> 0.
        assert_eq!(per_class[1], 1.0);
        assert_eq!(per_class[0], 0.0);
        assert_eq!(report.macro_f1.unwrap(), 1.0 / 6.0);

        // All-false predictions with positives present: that class scores 0.
        let none = vec![
            MultiLabelPrediction::from_flags(CategoryFlags::default()),
            MultiLabelPrediction::from_flags(CategoryFlags::default()),
        ];
        let report = evaluate_task_b(&truth, &none).unwrap();
        assert_eq!(report.per_class_f1.unwrap()[1], 0.0);
    }

    #[test]
    fn task_c_accuracy() {
        let decisions: Vec<PairDecision> = [(0.9, 0.1), (0.2, 0.8), (0.5, 0.5), (0.1, 0.9)]
            .iter()
            .map(|&(a, b)| PairDecision::new(a, b))
            .collect();
        let report = evaluate_task_c(&[0, 1, 0, 0], &decisions).unwrap();
        assert_eq!(report.accuracy, 0.75);

        let half = evaluate_task_c_indices(&[0, 0, 1, 1], &[0, 1, 1, 0]).unwrap();
        assert_eq!(half.accuracy, 0.5);
    }

    #[test]
    fn task_c_rejects_bad_index() {
        let err = evaluate_task_c_indices(&[0, 2], &[0, 1]).unwrap_err();
        assert!(matches!(err, MetricError::InvalidIndex { value: 2, .. }));
    }

    #[test]
    fn kv_text_has_four_digit_metrics() {
        let report = evaluate_task_a(&[true, false], &[true, false]).unwrap();
        let text = report.to_kv_text();
        assert!(text.contains("f1_positive 1.0000"));
        assert!(text.contains("n 2"));
    }
}
