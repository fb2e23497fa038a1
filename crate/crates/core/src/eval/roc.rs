use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

fn class_counts(truths: &[bool], scores: &[f64]) -> Result<(usize, usize), EvalError> {
    if truths.len() != scores.len() {
        return Err(EvalError::LengthMismatch(truths.len(), scores.len()));
    }
    let pos = truths.iter().filter(|t| **t).count();
    let neg = truths.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClassTest);
    }
    Ok((pos, neg))
}

/// ROC points from a threshold sweep over every distinct score, and the
/// trapezoid area under them.
pub fn roc_auc(truths: &[bool], scores: &[f64]) -> Result<(Vec<RocPoint>, f64), EvalError> {
    let (pos, neg) = class_counts(truths, scores)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0 }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut area2 = 0.0; // twice the area, in count units
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        let (tp0, fp0) = (tp, fp);
        while k < order.len() && scores[order[k]] == s {
            if truths[order[k]] {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        area2 += ((fp - fp0) * (tp + tp0)) as f64;
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }
    Ok((points, area2 / (2.0 * pos as f64 * neg as f64)))
}

/// Rank-sum statistic with mid-ranks for ties, normalised to [0, 1].
pub fn mann_whitney_auc(truths: &[bool], scores: &[f64]) -> Result<f64, EvalError> {
    let (pos, neg) = class_counts(truths, scores)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut k = 0;
    while k < order.len() {
        let mut end = k;
        while end + 1 < order.len() && scores[order[end + 1]] == scores[order[k]] {
            end += 1;
        }
        let mid = (k + end) as f64 / 2.0 + 1.0;
        for &i in &order[k..=end] {
            if truths[i] {
                rank_sum += mid;
            }
        }
        k = end + 1;
    }
    let p = pos as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * neg as f64))
}
