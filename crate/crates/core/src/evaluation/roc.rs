//! ROC curve, AUC and F1-optimal thresholds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Scores `>=` this are called positive.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roc {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

fn class_counts(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    if let Some(k) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::NonFinite(format!("score {k}")));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    Ok((pos, neg))
}

/// Sweep the threshold down through the unique scores; the area is summed
/// in integer counts, so it equals the Mann-Whitney statistic with ties
/// counted as one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<Roc> {
    let (pos, neg) = class_counts(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::MAX,
    }];
    let (mut tp, mut fp) = (0u128, 0u128);
    let mut twice_area = 0u128;
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        let (tp0, fp0) = (tp, fp);
        while k < order.len() && scores[order[k]] == s {
            if labels[order[k]] {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        twice_area += (fp - fp0) * (tp + tp0);
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
            threshold: s,
        });
    }
    let auc = twice_area as f64 / (2 * pos as u128 * neg as u128) as f64;
    Ok(Roc { points, auc })
}

/// Pairwise statistic: P(s+ > s-) + P(s+ = s-)/2.
pub fn mann_whitney_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = class_counts(scores, labels)?;
    let mut twice = 0u128;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            twice += match scores[i].partial_cmp(&scores[j]) {
                Some(std::cmp::Ordering::Greater) => 2,
                Some(std::cmp::Ordering::Equal) => 1,
                _ => 0,
            };
        }
    }
    Ok(twice as f64 / (2 * pos as u128 * neg as u128) as f64)
}

/// Threshold maximizing F1 when scores strictly above it are positive.
/// Candidates are midpoints between consecutive unique scores; ties go to
/// the lowest. With a single unique score everything is called positive.
pub fn choose_threshold_max_f1(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, _) = class_counts(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // walk thresholds upwards; below the k-th unique score everything at or
    // above it is positive
    let (mut tp, mut fp) = (pos, scores.len() - pos);
    let mut best: Option<(f64, f64)> = None;
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        while k < order.len() && scores[order[k]] == s {
            if labels[order[k]] {
                tp -= 1;
            } else {
                fp -= 1;
            }
            k += 1;
        }
        if k == order.len() {
            break;
        }
        let next = scores[order[k]];
        let threshold = s + (next - s) / 2.0;
        let fn_ = pos - tp;
        let f1 = if tp == 0 {
            0.0
        } else {
            2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
        };
        if best.map_or(true, |(_, b)| f1 > b) {
            best = Some((threshold, f1));
        }
    }
    Ok(match best {
        Some((t, _)) => t,
        None => scores[order[0]] - 1.0,
    })
}
