//! Regression and classification metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    /// Watts.
    pub mae: f64,
    /// Relative error in total energy, in `[0, 1]`.
    pub reite: f64,
    /// Predicted energy (Wh), from predictions clamped at zero.
    pub energy_pred: f64,
    /// True energy (Wh).
    pub energy_true: f64,
}

pub fn reite(energy_pred: f64, energy_true: f64) -> f64 {
    let m = energy_pred.max(energy_true);
    if m <= 0.0 {
        0.0
    } else {
        (energy_pred - energy_true).abs() / m
    }
}

/// `period` in seconds converts power sums to energy.
pub fn regression_metrics(pred: &[f64], truth: &[f64], period: f64) -> Result<RegressionMetrics> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::Empty("prediction series"));
    }
    let n = pred.len() as f64;
    let mae = pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum::<f64>() / n;
    let to_wh = period / 3600.0;
    let energy_pred = pred.iter().map(|p| p.max(0.0)).sum::<f64>() * to_wh;
    let energy_true = truth.iter().map(|t| t.max(0.0)).sum::<f64>() * to_wh;
    Ok(RegressionMetrics {
        mae,
        reite: reite(energy_pred, energy_true),
        energy_pred,
        energy_true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl ClassificationMetrics {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = ratio(2 * tp, 2 * tp + fp + fn_);
        Self {
            accuracy: ratio(tp + tn, tp + tn + fp + fn_),
            precision,
            recall,
            f1,
            tp,
            fp,
            tn,
            fn_,
        }
    }
}

/// Precision, recall and F1 are 0 when their denominator is 0.
pub fn classification_metrics(pred: &[bool], truth: &[bool]) -> Result<ClassificationMetrics> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&p, &t) in pred.iter().zip(truth) {
        match (p, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    Ok(ClassificationMetrics::from_counts(tp, fp, tn, fn_))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn regression_cases() {
        let t = [0.0, 100.0, 200.0, 0.0];
        let m = regression_metrics(&t, &t, 6.0).unwrap();
        assert_eq!((m.mae, m.reite), (0.0, 0.0));
        assert_eq!(reite(50.0, 100.0), 0.5);
        let zero = regression_metrics(&[0.0; 4], &t, 6.0).unwrap();
        assert_eq!(zero.reite, 1.0);
        assert_eq!(zero.mae, 75.0);
        assert_eq!(zero.energy_true, 300.0 * 6.0 / 3600.0);
        assert_eq!(regression_metrics(&[0.0; 4], &[0.0; 4], 6.0).unwrap().reite, 0.0);
        assert!(regression_metrics(&[0.0; 3], &t, 6.0).is_err());
    }

    #[test]
    fn classification_cases() {
        let truth = [true, false, true, false];
        let perfect = classification_metrics(&truth, &truth).unwrap();
        assert_eq!(
            (perfect.accuracy, perfect.precision, perfect.recall, perfect.f1),
            (1.0, 1.0, 1.0, 1.0)
        );
        let all = classification_metrics(&[true; 4], &truth).unwrap();
        assert_eq!((all.recall, all.precision, all.accuracy), (1.0, 0.5, 0.5));
        assert!((all.f1 - 2.0 / 3.0).abs() < 1e-15);
        let none = classification_metrics(&[false; 4], &truth).unwrap();
        assert_eq!((none.precision, none.recall, none.f1), (0.0, 0.0, 0.0));
    }

    proptest! {
        #[test]
        fn count_identities(pairs in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..300)) {
            let (p, t): (Vec<bool>, Vec<bool>) = pairs.into_iter().unzip();
            let m = classification_metrics(&p, &t).unwrap();
            let n = m.tp + m.tn + m.fp + m.fn_;
            prop_assert_eq!(n, p.len());
            prop_assert_eq!((m.accuracy * n as f64).round() as usize, m.tp + m.tn);
            prop_assert!((m.accuracy * n as f64 - (m.tp + m.tn) as f64).abs() < 1e-9);
            for v in [m.accuracy, m.precision, m.recall, m.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
