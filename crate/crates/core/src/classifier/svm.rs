//! Dual coordinate descent for the L2-regularised linear SVM.
//!
//! The bias is learned as the weight of a constant feature of value 1, so
//! it is regularised like the other weights.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dot, ClassifierError, Label, LabeledEmbedding, Result, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Hinge,
    SquaredHinge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub epochs: usize,
    /// Dual objective `½‖w‖² + ½ Σ D_ii α_i² − Σ α_i` after each epoch.
    pub objective_history: Vec<f64>,
}

impl LinearSvm {
    pub fn score(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }
}

pub(crate) fn class_counts(data: &[LabeledEmbedding]) -> (usize, usize) {
    let speech = data.iter().filter(|e| e.label == Label::Speech).count();
    (speech, data.len() - speech)
}

pub fn train_linear_svm(data: &[LabeledEmbedding], cfg: &TrainConfig) -> Result<LinearSvm> {
    cfg.validate()?;
    let (n_pos, n_neg) = class_counts(data);
    if n_pos == 0 || n_neg == 0 {
        return Err(ClassifierError::SingleClassData);
    }
    let dim = data[0].values.len();
    for e in data {
        if e.values.len() != dim {
            return Err(ClassifierError::DimMismatch { expected: dim, found: e.values.len() });
        }
        if e.values.iter().any(|v| !v.is_finite()) {
            return Err(ClassifierError::NonFiniteInput);
        }
    }
    let n = data.len();
    let class_c = |label: Label| -> f64 {
        if !cfg.balance_classes {
            return cfg.c;
        }
        let count = if label == Label::Speech { n_pos } else { n_neg };
        cfg.c * n as f64 / (2.0 * count as f64)
    };
    // D_ii and the box bound U_i for each loss.
    let (diag, upper): (Vec<f64>, Vec<f64>) = data
        .iter()
        .map(|e| {
            let c = class_c(e.label);
            match cfg.loss {
                Loss::Hinge => (0.0, c),
                Loss::SquaredHinge => (0.5 / c, f64::INFINITY),
            }
        })
        .unzip();
    let y: Vec<f64> = data.iter().map(|e| e.label.sign()).collect();
    let q_diag: Vec<f64> = data.iter().zip(&diag).map(|(e, d)| dot(&e.values, &e.values) + 1.0 + d).collect();

    let mut alpha = vec![0.0f64; n];
    let mut w = vec![0.0f64; dim];
    let mut b = 0.0f64;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut history = Vec::new();

    for epoch in 1..=cfg.max_iter {
        order.shuffle(&mut rng);
        let mut pg_max = f64::NEG_INFINITY;
        let mut pg_min = f64::INFINITY;
        for &i in &order {
            let xi = &data[i].values;
            let g = y[i] * (dot(&w, xi) + b) - 1.0 + diag[i] * alpha[i];
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == upper[i] {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - g / q_diag[i]).clamp(0.0, upper[i]);
                let step = (alpha[i] - old) * y[i];
                for (wj, xj) in w.iter_mut().zip(xi) {
                    *wj += step * xj;
                }
                b += step;
            }
        }
        let quad: f64 = dot(&w, &w) + b * b;
        let obj =
            0.5 * quad + 0.5 * alpha.iter().zip(&diag).map(|(a, d)| d * a * a).sum::<f64>() - alpha.iter().sum::<f64>();
        history.push(obj);
        if pg_max - pg_min <= cfg.tolerance {
            return Ok(LinearSvm { weights: w, bias: b, epochs: epoch, objective_history: history });
        }
    }
    Err(ClassifierError::NonConvergence(cfg.max_iter))
}
