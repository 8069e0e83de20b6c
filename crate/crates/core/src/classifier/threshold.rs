use serde::{Deserialize, Serialize};

use super::{ClassifierError, Label, Result};
use crate::metrics::{roc_curve, tpr_at_fpr};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSelection {
    pub threshold: f64,
    /// Empirical rates with `p >= threshold` counted as speech.
    pub fpr: f64,
    pub tpr: Option<f64>,
    /// TPR read off the interpolated ROC exactly at the target FPR.
    pub tpr_at_target: Option<f64>,
}

/// Smallest probability threshold whose empirical FPR is within
/// `target_fpr`. Ties at a negative's probability fall on the safe side.
pub fn select_threshold(probs: &[(f64, Label)], target_fpr: f64) -> Result<ThresholdSelection> {
    if !(0.0..1.0).contains(&target_fpr) {
        return Err(ClassifierError::InvalidConfig(format!("target FPR {target_fpr} must lie in [0, 1)")));
    }
    if probs.iter().any(|(p, _)| !p.is_finite()) {
        return Err(ClassifierError::NonFiniteInput);
    }
    let mut neg: Vec<f64> = probs.iter().filter(|(_, l)| *l == Label::Noise).map(|(p, _)| *p).collect();
    if neg.is_empty() {
        return Err(ClassifierError::NoNegatives);
    }
    neg.sort_by(|a, b| b.total_cmp(a));
    let n = neg.len();
    let allowed = (0..=n).rev().find(|&k| k as f64 / n as f64 <= target_fpr + 1e-12).unwrap_or(0);
    // allowed < n because target < 1; the threshold must exclude neg[allowed].
    let threshold = neg[allowed].next_up();

    let fp = neg.iter().filter(|&&p| p >= threshold).count();
    let pos: Vec<f64> = probs.iter().filter(|(_, l)| *l == Label::Speech).map(|(p, _)| *p).collect();
    let (tpr, tpr_at_target) = if pos.is_empty() {
        (None, None)
    } else {
        let tp = pos.iter().filter(|&&p| p >= threshold).count();
        let items: Vec<(f64, bool)> = probs.iter().map(|(p, l)| (*p, *l == Label::Speech)).collect();
        let curve = roc_curve(&items).expect("both classes present");
        (Some(tp as f64 / pos.len() as f64), Some(tpr_at_fpr(&curve, target_fpr)))
    };
    Ok(ThresholdSelection { threshold, fpr: fp as f64 / n as f64, tpr, tpr_at_target })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise(ps: &[f64]) -> Vec<(f64, Label)> {
        ps.iter().map(|&p| (p, Label::Noise)).collect()
    }

    #[test]
    fn four_negatives() {
        let sel = select_threshold(&noise(&[0.1, 0.2, 0.3, 0.9]), 0.315).unwrap();
        assert!(sel.threshold > 0.3 && sel.threshold < 0.3 + 1e-12);
        assert_eq!(sel.fpr, 0.25);
    }

    #[test]
    fn perfect_separation() {
        let mut data = noise(&[0.05, 0.1, 0.2]);
        data.extend([0.8, 0.9, 0.95].map(|p| (p, Label::Speech)));
        let sel = select_threshold(&data, 0.315).unwrap();
        assert!(sel.threshold > 0.2 && sel.threshold <= 0.8);
        assert_eq!(sel.fpr, 0.0);
        assert_eq!(sel.tpr, Some(1.0));
    }

    #[test]
    fn strict_target_excludes_all_negatives() {
        let mut data = noise(&[0.1, 0.4, 0.6]);
        data.extend([0.7, 0.99].map(|p| (p, Label::Speech)));
        let sel = select_threshold(&data, 0.0).unwrap();
        assert!(sel.threshold > 0.6);
        assert_eq!(sel.fpr, 0.0);
        assert_eq!(sel.tpr, Some(1.0));
    }

    #[test]
    fn tighter_target_never_raises_tpr() {
        let data: Vec<(f64, Label)> = (0..200)
            .map(|i| {
                let p = ((i * 37) % 200) as f64 / 200.0;
                (p, if (i * 7) % 3 == 0 { Label::Speech } else { Label::Noise })
            })
            .collect();
        let mut last = f64::INFINITY;
        for t in [0.9, 0.5, 0.315, 0.1, 0.01, 0.0] {
            let sel = select_threshold(&data, t).unwrap();
            assert!(sel.fpr <= t + 1e-12);
            assert!(sel.tpr.unwrap() <= last);
            last = sel.tpr.unwrap();
        }
    }

    #[test]
    fn needs_negatives() {
        assert!(matches!(select_threshold(&[(0.5, Label::Speech)], 0.3), Err(ClassifierError::NoNegatives)));
    }
}
