use serde::{Deserialize, Serialize};

use super::{PipelineError, Result};
use crate::xvector::XVector;

/// `1 - cos(a, b)`. A zero vector is at distance 0 from another zero
/// vector and 1 from anything else.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    match (na == 0.0, nb == 0.0) {
        (true, true) => 0.0,
        (true, false) | (false, true) => 1.0,
        _ => (1.0 - dot / (na.sqrt() * nb.sqrt())).clamp(0.0, 2.0),
    }
}

/// Average-linkage agglomerative clustering under cosine distance.
///
/// Merges the closest pair while its distance is at most `threshold`; equal
/// distances go to the pair with the lowest indices. Returns dense cluster
/// ids numbered by first appearance.
pub fn cluster_ahc(vectors: &[Vec<f64>], threshold: f64) -> Result<Vec<usize>> {
    let n = vectors.len();
    if n == 0 {
        return Err(PipelineError::EmptyInput);
    }
    let mut d = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = cosine_distance(&vectors[i], &vectors[j]);
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut owner: Vec<usize> = (0..n).collect();
    // Nearest active neighbour with a larger index.
    let mut nn = vec![usize::MAX; n];
    let mut nn_d = vec![f64::INFINITY; n];
    let recompute = |k: usize, d: &[f64], active: &[bool], nn: &mut [usize], nn_d: &mut [f64]| {
        nn[k] = usize::MAX;
        nn_d[k] = f64::INFINITY;
        for m in k + 1..n {
            if active[m] && d[k * n + m] < nn_d[k] {
                nn[k] = m;
                nn_d[k] = d[k * n + m];
            }
        }
    };
    for k in 0..n {
        recompute(k, &d, &active, &mut nn, &mut nn_d);
    }
    loop {
        let mut best: Option<usize> = None;
        for k in 0..n {
            if active[k] && nn[k] != usize::MAX && best.is_none_or(|b| nn_d[k] < nn_d[b]) {
                best = Some(k);
            }
        }
        let Some(i) = best else { break };
        if nn_d[i] > threshold {
            break;
        }
        let j = nn[i];
        let (si, sj) = (size[i] as f64, size[j] as f64);
        for k in 0..n {
            if active[k] && k != i && k != j {
                let v = (si * d[i * n + k] + sj * d[j * n + k]) / (si + sj);
                d[i * n + k] = v;
                d[k * n + i] = v;
            }
        }
        active[j] = false;
        size[i] += size[j];
        for o in owner.iter_mut() {
            if *o == j {
                *o = i;
            }
        }
        for k in 0..n {
            if !active[k] {
                continue;
            }
            if k == i || nn[k] == i || nn[k] == j {
                recompute(k, &d, &active, &mut nn, &mut nn_d);
            } else if k < i {
                let v = d[k * n + i];
                if v < nn_d[k] || (v == nn_d[k] && i < nn[k]) {
                    nn[k] = i;
                    nn_d[k] = v;
                }
            }
        }
    }
    let mut dense = vec![usize::MAX; n];
    let mut next = 0;
    Ok(owner
        .iter()
        .map(|&o| {
            if dense[o] == usize::MAX {
                dense[o] = next;
                next += 1;
            }
            dense[o]
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteredVector {
    pub xvector: XVector,
    pub cluster: usize,
    pub probability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClusteredSequence {
    pub entries: Vec<ClusteredVector>,
}

impl ClusteredSequence {
    pub fn num_clusters(&self) -> usize {
        self.entries.iter().map(|e| e.cluster + 1).max().unwrap_or(0)
    }
}

/// Clusters x-vectors, optionally after subtracting their mean.
pub fn cluster_xvectors(
    vectors: &[XVector],
    probabilities: &[Option<f64>],
    threshold: f64,
    center: bool,
) -> Result<ClusteredSequence> {
    let mut rows: Vec<Vec<f64>> = vectors.iter().map(XVector::as_f64).collect();
    if center && !rows.is_empty() {
        let dim = rows[0].len();
        let mut mean = vec![0.0; dim];
        for r in &rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= rows.len() as f64);
        for r in &mut rows {
            for (v, m) in r.iter_mut().zip(&mean) {
                *v -= m;
            }
        }
    }
    let ids = cluster_ahc(&rows, threshold)?;
    Ok(ClusteredSequence {
        entries: vectors
            .iter()
            .zip(ids)
            .zip(probabilities)
            .map(|((v, cluster), &probability)| ClusteredVector { xvector: v.clone(), cluster, probability })
            .collect(),
    })
}
