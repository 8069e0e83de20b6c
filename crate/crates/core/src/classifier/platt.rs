use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::svm::class_counts;
use super::{
    l1_normalize, train_linear_svm, CalibratedLinearModel, ClassifierError, Label, LabeledEmbedding, Result,
    TrainConfig, TrainingMetadata,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmoidFit {
    pub a: f64,
    pub b: f64,
    pub iterations: usize,
}

/// Fold index per example. Indices are shuffled once, then each class deals
/// its members round-robin over the folds, so the assignment does not
/// depend on which class is called speech.
pub fn stratified_folds(labels: &[Label], k: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![0usize; labels.len()];
    let (mut n_speech, mut n_noise) = (0usize, 0usize);
    for i in order {
        let counter = if labels[i] == Label::Speech { &mut n_speech } else { &mut n_noise };
        folds[i] = *counter % k;
        *counter += 1;
    }
    folds
}

/// Fits `p = 1 / (1 + exp(A s + B))` to scores with smoothed targets,
/// by Newton's method with a backtracking line search.
pub fn fit_sigmoid(scores: &[f64], labels: &[Label]) -> Result<SigmoidFit> {
    const MAX_ITER: usize = 100;
    const MIN_STEP: f64 = 1e-10;
    const SIGMA: f64 = 1e-12;
    const GRAD_TOL: f64 = 1e-10;

    let prior1 = labels.iter().filter(|&&l| l == Label::Speech).count() as f64;
    let prior0 = labels.len() as f64 - prior1;
    if prior1 == 0.0 || prior0 == 0.0 {
        return Err(ClassifierError::SingleClassData);
    }
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi - lo > 1e-12 * (1.0 + hi.abs().max(lo.abs()))) {
        return Err(ClassifierError::CalibrationDegenerate);
    }
    let t_hi = (prior1 + 1.0) / (prior1 + 2.0);
    let t_lo = 1.0 / (prior0 + 2.0);
    let targets: Vec<f64> = labels.iter().map(|&l| if l == Label::Speech { t_hi } else { t_lo }).collect();

    let objective = |a: f64, b: f64| -> f64 {
        scores
            .iter()
            .zip(&targets)
            .map(|(&s, &t)| {
                let z = s * a + b;
                if z >= 0.0 {
                    t * z + (-z).exp().ln_1p()
                } else {
                    (t - 1.0) * z + z.exp().ln_1p()
                }
            })
            .sum()
    };

    let mut a = 0.0;
    let mut b = ((prior0 + 1.0) / (prior1 + 1.0)).ln();
    let mut fval = objective(a, b);
    let mut it = 0;
    while it < MAX_ITER {
        it += 1;
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (SIGMA, SIGMA, 0.0, 0.0, 0.0);
        for (&s, &t) in scores.iter().zip(&targets) {
            let z = s * a + b;
            let (p, q) = if z >= 0.0 {
                let e = (-z).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = z.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += s * s * d2;
            h22 += d2;
            h21 += s * d2;
            let d1 = t - p;
            g1 += s * d1;
            g2 += d1;
        }
        if g1.abs() < GRAD_TOL && g2.abs() < GRAD_TOL {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        let mut accepted = false;
        while step >= MIN_STEP {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                accepted = true;
                break;
            }
            step /= 2.0;
        }
        if !accepted {
            // No further decrease is representable; we are at the optimum.
            break;
        }
    }
    Ok(SigmoidFit { a, b, iterations: it })
}

fn normalized(data: &[LabeledEmbedding]) -> Result<Vec<LabeledEmbedding>> {
    data.iter()
        .map(|e| {
            Ok(LabeledEmbedding { values: l1_normalize(&e.values)?, label: e.label, source_id: e.source_id.clone() })
        })
        .collect()
}

/// Cross-validated Platt calibration. Each fold's held-out scores come from
/// an SVM trained on the other folds; the sigmoid is fit on the pooled
/// held-out scores and the final SVM is retrained on all the data.
pub fn platt_calibrate(data: &[LabeledEmbedding], cfg: &TrainConfig) -> Result<CalibratedLinearModel> {
    cfg.validate()?;
    let (n_speech, n_noise) = class_counts(data);
    if n_speech == 0 || n_noise == 0 {
        return Err(ClassifierError::SingleClassData);
    }
    if n_speech.min(n_noise) < cfg.folds {
        return Err(ClassifierError::InsufficientData { needed: cfg.folds, found: n_speech.min(n_noise) });
    }
    let data = normalized(data)?;
    let labels: Vec<Label> = data.iter().map(|e| e.label).collect();
    let folds = stratified_folds(&labels, cfg.folds, cfg.seed);

    let mut scores = vec![0.0; data.len()];
    for k in 0..cfg.folds {
        let train: Vec<LabeledEmbedding> =
            data.iter().zip(&folds).filter(|(_, &f)| f != k).map(|(e, _)| e.clone()).collect();
        let svm = train_linear_svm(&train, cfg)?;
        for (i, e) in data.iter().enumerate() {
            if folds[i] == k {
                scores[i] = svm.score(&e.values);
            }
        }
    }
    let fit = fit_sigmoid(&scores, &labels)?;
    let full = train_linear_svm(&data, cfg)?;
    Ok(CalibratedLinearModel {
        weights: full.weights,
        bias: full.bias,
        calib_a: fit.a,
        calib_b: fit.b,
        decision_threshold: 0.5,
        metadata: TrainingMetadata {
            c: cfg.c,
            folds: cfg.folds,
            seed: cfg.seed,
            loss: cfg.loss,
            num_speech: n_speech,
            num_noise: n_noise,
        },
    })
}
