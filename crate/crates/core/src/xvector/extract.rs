use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Result, XVector, XVectorError, XVectorNet};
use crate::frontend::FeatureMatrix;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionConfig {
    pub window_s: f64,
    pub stride_s: f64,
    pub min_window_s: f64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self { window_s: 1.5, stride_s: 0.75, min_window_s: 0.5 }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.stride_s > 0.0 && self.stride_s <= self.window_s) {
            return Err(XVectorError::InvalidConfig(format!(
                "stride {} must be in (0, window {}]",
                self.stride_s, self.window_s
            )));
        }
        if !(self.min_window_s > 0.0 && self.min_window_s <= self.window_s) {
            return Err(XVectorError::InvalidConfig(format!(
                "min window {} must be in (0, window {}]",
                self.min_window_s, self.window_s
            )));
        }
        Ok(())
    }
}

/// Window intervals for a stream of `duration_s` seconds.
///
/// Full windows start at multiples of the stride. If audio remains after
/// the last full window, one more window starts on the stride grid and is
/// clamped to the stream end, provided it is at least `min_window_s` long.
pub fn window_grid(duration_s: f64, cfg: &ExtractionConfig) -> Result<Vec<(f64, f64)>> {
    cfg.validate()?;
    if duration_s + EPS < cfg.min_window_s {
        return Err(XVectorError::StreamTooShort { duration_s, min_s: cfg.min_window_s });
    }
    let mut out = Vec::new();
    let mut i = 0usize;
    loop {
        let start = i as f64 * cfg.stride_s;
        if start + cfg.window_s > duration_s + EPS {
            break;
        }
        out.push((start, start + cfg.window_s));
        i += 1;
    }
    let covered = out.last().map_or(0.0, |w| w.1);
    if duration_s - covered > EPS {
        let start = i as f64 * cfg.stride_s;
        if duration_s - start + EPS >= cfg.min_window_s {
            out.push((start, duration_s));
        }
    }
    Ok(out)
}

/// Runs the network on each window (seconds relative to the stream start,
/// which is `feats.start_time_s`).
pub fn extract_windows(net: &XVectorNet, feats: &FeatureMatrix, windows: &[(f64, f64)]) -> Result<Vec<XVector>> {
    if feats.dim() != net.input_dim() {
        return Err(XVectorError::DimMismatch(format!(
            "features have dim {}, network expects {}",
            feats.dim(),
            net.input_dim()
        )));
    }
    let dim = feats.dim();
    windows
        .par_iter()
        .map(|&(start, end)| {
            let (mut a, b) = feats.frame_range(start, end);
            if a == b {
                // Window past the last frame: reuse the final frame.
                a = b.saturating_sub(1);
            }
            let b = b.max(a + 1).min(feats.num_frames());
            if a >= b {
                return Err(XVectorError::EmptyInput);
            }
            let rows: Vec<f32> = feats.data()[a * dim..b * dim].iter().map(|&v| v as f32).collect();
            let x = Array2::from_shape_vec((b - a, dim), rows).expect("shape");
            Ok(XVector {
                values: net.forward_window(x.view())?,
                window_start_s: feats.start_time_s + start,
                window_end_s: feats.start_time_s + end,
            })
        })
        .collect()
}

/// X-vectors on the sliding-window grid over the whole feature stream.
pub fn extract_sequence(net: &XVectorNet, feats: &FeatureMatrix, cfg: &ExtractionConfig) -> Result<Vec<XVector>> {
    let windows = window_grid(feats.duration_s(), cfg)?;
    extract_windows(net, feats, &windows)
}
