use serde::{Deserialize, Serialize};

use super::{MetricsError, Result};

pub const DEFAULT_TARGET_FPR: f64 = 0.315;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Items with `score >= threshold` are predicted positive.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

/// ROC from `(score, is_positive)` pairs, sweeping each distinct score from
/// high to low. Starts at (0,0) and ends at (1,1).
pub fn roc_curve(items: &[(f64, bool)]) -> Result<RocCurve> {
    if items.iter().any(|(s, _)| s.is_nan()) {
        return Err(MetricsError::InvalidInput("NaN score".into()));
    }
    let n_pos = items.iter().filter(|(_, t)| *t).count();
    let n_neg = items.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricsError::DegenerateLabels);
    }
    let mut sorted = items.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0, threshold: f64::INFINITY }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let thr = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == thr {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint { fpr: fp as f64 / n_neg as f64, tpr: tp as f64 / n_pos as f64, threshold: thr });
    }
    Ok(RocCurve { points })
}

/// TPR at `target` FPR, interpolating linearly between the last point at or
/// below the target and the first point above it.
pub fn tpr_at_fpr(curve: &RocCurve, target: f64) -> f64 {
    let pts = &curve.points;
    let Some(lo) = pts.iter().rposition(|p| p.fpr <= target) else {
        return 0.0;
    };
    match pts[lo..].iter().position(|p| p.fpr > target) {
        None => pts[lo].tpr,
        Some(off) => {
            let (a, b) = (pts[lo], pts[lo + off]);
            a.tpr + (target - a.fpr) / (b.fpr - a.fpr) * (b.tpr - a.tpr)
        }
    }
}
