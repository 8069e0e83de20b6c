//! PCA and exact t-SNE for inspecting embedding sets.

use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("DegenerateData: {0}")]
    DegenerateData(String),
    #[error("PerplexityTooLarge: perplexity {perplexity} needs at least {needed} points, got {found}")]
    PerplexityTooLarge { perplexity: f64, needed: usize, found: usize },
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    pub mean: Vec<f64>,
    /// `k` unit-norm principal axes, strongest first.
    pub components: Vec<Vec<f64>>,
    /// Explained-variance ratio of every component, non-increasing.
    pub ratios: Vec<f64>,
    pub projected: Vec<Vec<f64>>,
}

impl PcaResult {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn back_project(&self, y: &[f64]) -> Vec<f64> {
        let mut x = self.mean.clone();
        for (c, &coef) in self.components.iter().zip(y) {
            for (xi, ci) in x.iter_mut().zip(c) {
                *xi += coef * ci;
            }
        }
        x
    }
}

fn check_rows(rows: &[Vec<f64>]) -> Result<usize> {
    let d = rows.first().map_or(0, Vec::len);
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(AnalysisError::InvalidConfig("rows must be non-empty and of equal length".into()));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(AnalysisError::DegenerateData("non-finite value".into()));
    }
    Ok(d)
}

/// Keeps the fewest components whose cumulative explained variance exceeds
/// `target_variance`.
pub fn pca_reduce(rows: &[Vec<f64>], target_variance: f64) -> Result<PcaResult> {
    if !(target_variance > 0.0 && target_variance <= 1.0) {
        return Err(AnalysisError::InvalidConfig(format!("target variance {target_variance} not in (0, 1]")));
    }
    if rows.len() < 2 {
        return Err(AnalysisError::DegenerateData(format!("need at least 2 rows, got {}", rows.len())));
    }
    let d = check_rows(rows)?;
    let n = rows.len();
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, d, |i, j| rows[i][j] - mean[j]);
    let cov = (centered.transpose() * &centered) / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let total: f64 = values.iter().sum();
    if !(total > 0.0) {
        return Err(AnalysisError::DegenerateData("zero total variance".into()));
    }
    let ratios: Vec<f64> = values.iter().map(|v| v / total).collect();
    let mut cum = 0.0;
    let mut k = None;
    for (i, r) in ratios.iter().enumerate() {
        cum += r;
        if cum > target_variance {
            k = Some(i + 1);
            break;
        }
    }
    let k = k.unwrap_or_else(|| ratios.iter().filter(|&&r| r > 0.0).count().max(1));
    let components: Vec<Vec<f64>> = order[..k]
        .iter()
        .map(|&i| {
            let mut c: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            // Fix the sign so the largest-magnitude entry is positive.
            let (_, &peak) =
                c.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0))).unwrap();
            if peak < 0.0 {
                c.iter_mut().for_each(|v| *v = -*v);
            }
            c
        })
        .collect();
    let projected = (0..n)
        .map(|i| components.iter().map(|c| c.iter().zip(centered.row(i).iter()).map(|(a, b)| a * b).sum()).collect())
        .collect();
    Ok(PcaResult { mean, components, ratios, projected })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsneResult {
    pub coords: Vec<[f64; 2]>,
    /// `(iteration, KL)` every 100 iterations and at the end.
    pub kl_checkpoints: Vec<(usize, f64)>,
    pub final_kl: f64,
    /// Entropy (nats) of each conditional distribution after calibration.
    pub entropies: Vec<f64>,
}

const BETA_TOL: f64 = 1e-5;

/// Conditional row `i` for precision `beta`; returns the entropy.
fn conditional_row(dist: &[f64], i: usize, beta: f64, out: &mut [f64]) -> f64 {
    let min = dist.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &d)| d).fold(f64::INFINITY, f64::min);
    let mut sum = 0.0;
    let mut dot = 0.0;
    for (j, (&d, o)) in dist.iter().zip(out.iter_mut()).enumerate() {
        if j == i {
            *o = 0.0;
            continue;
        }
        let shifted = d - min;
        *o = (-beta * shifted).exp();
        sum += *o;
        dot += shifted * *o;
    }
    out.iter_mut().for_each(|o| *o /= sum);
    sum.ln() + beta * dot / sum
}

fn calibrate_row(dist: &[f64], i: usize, target_entropy: f64, out: &mut [f64]) -> f64 {
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let mut beta = 1.0;
    let mut h = conditional_row(dist, i, beta, out);
    for _ in 0..200 {
        if (h - target_entropy).abs() <= BETA_TOL {
            break;
        }
        if h > target_entropy {
            lo = beta;
            beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = (beta + lo) / 2.0;
        }
        h = conditional_row(dist, i, beta, out);
    }
    h
}

fn kl_divergence(p: &[f64], y: &[[f64; 2]]) -> f64 {
    let n = y.len();
    let num: Vec<f64> = (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            if i == j {
                0.0
            } else {
                1.0 / (1.0 + (y[i][0] - y[j][0]).powi(2) + (y[i][1] - y[j][1]).powi(2))
            }
        })
        .collect();
    let z: f64 = num.iter().sum();
    p.iter()
        .zip(&num)
        .enumerate()
        .filter(|(k, _)| k / n != k % n)
        .map(|(_, (&pij, &q))| pij * (pij / (q / z).max(1e-300)).ln())
        .sum()
}

/// Exact O(N²) t-SNE to two dimensions.
pub fn tsne_embed(rows: &[Vec<f64>], cfg: &TsneConfig) -> Result<TsneResult> {
    let n = rows.len();
    if !(cfg.perplexity > 0.0) || cfg.iterations == 0 {
        return Err(AnalysisError::InvalidConfig("perplexity and iterations must be positive".into()));
    }
    let needed = (3.0 * cfg.perplexity).ceil() as usize;
    if n < needed {
        return Err(AnalysisError::PerplexityTooLarge { perplexity: cfg.perplexity, needed, found: n });
    }
    check_rows(rows)?;

    let dist: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            (0..n).map(move |j| rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        })
        .collect();
    let target = cfg.perplexity.ln();
    let mut cond = vec![0.0; n * n];
    let entropies: Vec<f64> = cond
        .par_chunks_mut(n)
        .enumerate()
        .map(|(i, out)| calibrate_row(&dist[i * n..(i + 1) * n], i, target, out))
        .collect();
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[i * n + j] = ((cond[i * n + j] + cond[j * n + i]) / (2.0 * n as f64)).max(1e-12);
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let init = Normal::new(0.0, 1e-4).expect("valid normal");
    let mut y: Vec<[f64; 2]> = (0..n).map(|_| [init.sample(&mut rng), init.sample(&mut rng)]).collect();
    let mut update = vec![[0.0f64; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut checkpoints = Vec::new();

    for it in 0..cfg.iterations {
        let early = it < cfg.exaggeration_iters;
        let exag = if early { cfg.early_exaggeration } else { 1.0 };
        let momentum = if early { 0.5 } else { 0.8 };
        let num: Vec<f64> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let y = &y;
                (0..n).map(move |j| {
                    if i == j {
                        0.0
                    } else {
                        1.0 / (1.0 + (y[i][0] - y[j][0]).powi(2) + (y[i][1] - y[j][1]).powi(2))
                    }
                })
            })
            .collect();
        let row_sums: Vec<f64> = num.par_chunks(n).map(|r| r.iter().sum()).collect();
        let z: f64 = row_sums.iter().sum();
        let grad: Vec<[f64; 2]> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut g = [0.0; 2];
                for j in 0..n {
                    let q = num[i * n + j];
                    let m = (exag * p[i * n + j] - q / z) * q;
                    g[0] += m * (y[i][0] - y[j][0]);
                    g[1] += m * (y[i][1] - y[j][1]);
                }
                [4.0 * g[0], 4.0 * g[1]]
            })
            .collect();
        for i in 0..n {
            for d in 0..2 {
                let same_sign = (grad[i][d] > 0.0) == (update[i][d] > 0.0);
                gains[i][d] = if same_sign { gains[i][d] * 0.8 } else { gains[i][d] + 0.2 }.max(0.01);
                update[i][d] = momentum * update[i][d] - cfg.learning_rate * gains[i][d] * grad[i][d];
                y[i][d] += update[i][d];
            }
        }
        let mean = [y.iter().map(|v| v[0]).sum::<f64>() / n as f64, y.iter().map(|v| v[1]).sum::<f64>() / n as f64];
        for v in &mut y {
            v[0] -= mean[0];
            v[1] -= mean[1];
        }
        if (it + 1) % 100 == 0 || it + 1 == cfg.iterations {
            checkpoints.push((it + 1, kl_divergence(&p, &y)));
        }
    }
    let final_kl = checkpoints.last().map_or(f64::NAN, |c| c.1);
    if y.iter().flatten().any(|v| !v.is_finite()) {
        return Err(AnalysisError::DegenerateData("t-SNE diverged".into()));
    }
    Ok(TsneResult { coords: y, kl_checkpoints: checkpoints, final_kl, entropies })
}

/// Seeded choice of at most `max` indices, returned in ascending order.
pub fn subsample_indices(n: usize, max: usize, seed: u64) -> Vec<usize> {
    if n <= max {
        return (0..n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, n, max).into_vec();
    idx.sort_unstable();
    idx
}

/// `x,y,label,source-id` with a header row.
pub fn projection_csv(coords: &[[f64; 2]], labels: &[String], source_ids: &[String]) -> String {
    let mut s = String::from("x,y,label,source-id\n");
    for ((c, l), src) in coords.iter().zip(labels).zip(source_ids) {
        let _ = writeln!(s, "{},{},{},{}", c[0], c[1], l, src);
    }
    s
}
