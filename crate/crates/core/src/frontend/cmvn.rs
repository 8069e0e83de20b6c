use super::{FeatureMatrix, FrontendError, Result};

/// About 3 s at a 10 ms shift.
pub const DEFAULT_CMVN_WINDOW: usize = 301;

/// Sliding cepstral mean and variance normalisation.
///
/// Every frame is normalised per dimension with the mean and population
/// standard deviation of a centred window of `window_frames` frames,
/// truncated at the matrix edges. Dimensions whose windowed variance is zero
/// are only mean-subtracted.
pub fn apply_cmvn(feats: &FeatureMatrix, window_frames: usize) -> Result<FeatureMatrix> {
    if feats.is_empty() {
        return Err(FrontendError::EmptyFeatures);
    }
    if window_frames == 0 || window_frames.is_multiple_of(2) {
        return Err(FrontendError::InvalidConfig(format!(
            "CMVN window must be a positive odd frame count, got {window_frames}"
        )));
    }
    let t_len = feats.num_frames();
    let dim = feats.dim();
    let half = window_frames / 2;
    let mut out = vec![0.0f64; t_len * dim];

    // Prefix sums over globally centred columns keep the running sums small.
    let mut col = vec![0.0f64; t_len];
    let mut sum = vec![0.0f64; t_len + 1];
    let mut sum_sq = vec![0.0f64; t_len + 1];
    for d in 0..dim {
        for (t, v) in col.iter_mut().enumerate() {
            *v = feats.row(t)[d];
        }
        let offset = col.iter().sum::<f64>() / t_len as f64;
        for t in 0..t_len {
            let c = col[t] - offset;
            sum[t + 1] = sum[t] + c;
            sum_sq[t + 1] = sum_sq[t] + c * c;
        }
        for t in 0..t_len {
            let a = t.saturating_sub(half);
            let b = (t + half + 1).min(t_len);
            let n = (b - a) as f64;
            let mean = (sum[b] - sum[a]) / n;
            let mean_sq = (sum_sq[b] - sum_sq[a]) / n;
            let var = (mean_sq - mean * mean).max(0.0);
            let centred = col[t] - offset - mean;
            out[t * dim + d] = if var <= 1e-10 * mean_sq || var < 1e-300 { centred } else { centred / var.sqrt() };
        }
    }
    let mut m = FeatureMatrix::from_vec(out, t_len, dim, feats.frame_shift_s);
    m.start_time_s = feats.start_time_s;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(t: usize, d: usize, seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..t * d).map(|_| rng.random_range(-5.0..5.0) + 3.0).collect();
        FeatureMatrix::from_vec(data, t, d, 0.01)
    }

    /// Direct per-frame recomputation of the windowed statistics.
    fn naive_cmvn(f: &FeatureMatrix, window: usize) -> Vec<f64> {
        let (t_len, dim, half) = (f.num_frames(), f.dim(), window / 2);
        let mut out = vec![0.0; t_len * dim];
        for t in 0..t_len {
            let a = t.saturating_sub(half);
            let b = (t + half + 1).min(t_len);
            for d in 0..dim {
                let vals: Vec<f64> = (a..b).map(|s| f.row(s)[d]).collect();
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
                out[t * dim + d] = (f.row(t)[d] - mean) / var.sqrt();
            }
        }
        out
    }

    #[test]
    fn full_window_is_global_cmvn() {
        let f = random_matrix(120, 6, 1);
        let n = apply_cmvn(&f, 301).unwrap();
        for d in 0..6 {
            let col: Vec<f64> = n.rows().map(|r| r[d]).collect();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64).sqrt();
            assert!(mean.abs() < 1e-9, "mean {mean}");
            assert!((std - 1.0).abs() < 1e-6, "std {std}");
        }
    }

    #[test]
    fn constant_column_becomes_zero() {
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![7.25, i as f64]).collect();
        let n = apply_cmvn(&FeatureMatrix::from_rows(&rows, 0.01), 11).unwrap();
        for r in n.rows() {
            assert!(r[0].abs() < 1e-12);
        }
    }

    #[test]
    fn sliding_matches_naive() {
        let f = random_matrix(1000, 5, 2);
        let fast = apply_cmvn(&f, 301).unwrap();
        let slow = naive_cmvn(&f, 301);
        for (a, b) in fast.data().iter().zip(&slow) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn errors() {
        let empty = FeatureMatrix::from_vec(vec![], 0, 30, 0.01);
        assert!(matches!(apply_cmvn(&empty, 301), Err(FrontendError::EmptyFeatures)));
        let f = random_matrix(10, 2, 3);
        assert!(matches!(apply_cmvn(&f, 4), Err(FrontendError::InvalidConfig(_))));
    }
}
