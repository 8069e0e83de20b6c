use ndarray::{s, Array1, Array2, ArrayView2, Axis};

use super::{Result, XVectorError, EMBEDDING_DIM};

pub const BN_EPSILON: f32 = 1e-5;

/// Affine transform optionally followed by ReLU and inference-mode batch norm.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineParams {
    /// `output_dim x input_dim`, row-major.
    pub weights: Array2<f32>,
    pub bias: Array1<f32>,
    pub bn_mean: Array1<f32>,
    pub bn_var: Array1<f32>,
    pub relu_bn: bool,
}

impl AffineParams {
    pub fn input_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.nrows()
    }

    fn validate(&self, what: &str) -> Result<()> {
        let out = self.output_dim();
        if self.bias.len() != out || self.bn_mean.len() != out || self.bn_var.len() != out {
            return Err(XVectorError::DimMismatch(format!(
                "{what}: bias/batch-norm length does not match output dim {out}"
            )));
        }
        let finite = |a: &Array1<f32>| a.iter().all(|v| v.is_finite());
        let all_finite = self.weights.iter().all(|v| v.is_finite())
            && finite(&self.bias)
            && finite(&self.bn_mean)
            && finite(&self.bn_var);
        if !all_finite {
            return Err(XVectorError::NonFiniteWeight(what.to_string()));
        }
        if self.relu_bn && self.bn_var.iter().any(|&v| v < 0.0) {
            return Err(XVectorError::NonFiniteWeight(format!("{what}: negative batch-norm variance")));
        }
        Ok(())
    }

    /// Applies the layer to each row of `x`.
    fn apply(&self, x: ArrayView2<f32>) -> Array2<f32> {
        let mut y = x.dot(&self.weights.t());
        y += &self.bias;
        if self.relu_bn {
            let scale: Array1<f32> = self.bn_var.mapv(|v| 1.0 / (v + BN_EPSILON).sqrt());
            for mut row in y.axis_iter_mut(Axis(0)) {
                for ((v, m), s) in row.iter_mut().zip(&self.bn_mean).zip(&scale) {
                    *v = (v.max(0.0) - m) * s;
                }
            }
        }
        y
    }
}

/// Frame-level TDNN layer: splices the input at the given temporal offsets
/// and applies an affine over the concatenation (offset-major).
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLayer {
    pub offsets: Vec<i32>,
    pub input_dim: usize,
    pub params: AffineParams,
}

impl FrameLayer {
    pub fn left_context(&self) -> usize {
        (-self.offsets.iter().copied().min().unwrap_or(0)).max(0) as usize
    }

    pub fn right_context(&self) -> usize {
        self.offsets.iter().copied().max().unwrap_or(0).max(0) as usize
    }

    pub fn output_dim(&self) -> usize {
        self.params.output_dim()
    }

    /// Output frames exist only where every offset lands inside the input.
    pub(crate) fn forward(&self, x: ArrayView2<f32>) -> Array2<f32> {
        let (left, right) = (self.left_context(), self.right_context());
        let t_out = x.nrows() - left - right;
        let width = self.input_dim;
        let mut spliced = Array2::<f32>::zeros((t_out, width * self.offsets.len()));
        for (j, &o) in self.offsets.iter().enumerate() {
            let src_start = (left as i64 + o as i64) as usize;
            spliced
                .slice_mut(s![.., j * width..(j + 1) * width])
                .assign(&x.slice(s![src_start..src_start + t_out, ..]));
        }
        self.params.apply(spliced.view())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Frame(FrameLayer),
    StatsPool { input_dim: usize },
    Segment(AffineParams),
}

/// Validated, immutable x-vector network.
#[derive(Debug, Clone, PartialEq)]
pub struct XVectorNet {
    layers: Vec<Layer>,
    pool_index: usize,
}

impl XVectorNet {
    /// Checks the layer order (frame layers, one pooling layer, at least one
    /// segment layer), the dimension chain, finiteness and the embedding size.
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let pool_index = layers
            .iter()
            .position(|l| matches!(l, Layer::StatsPool { .. }))
            .ok_or_else(|| XVectorError::DimMismatch("network has no statistics pooling layer".into()))?;
        if pool_index == 0 {
            return Err(XVectorError::DimMismatch("no frame layers before pooling".into()));
        }
        let mut dim = None;
        for (i, layer) in layers.iter().enumerate() {
            let (input, output) = match layer {
                Layer::Frame(f) => {
                    if i > pool_index {
                        return Err(XVectorError::DimMismatch(format!("layer {i}: frame layer after pooling")));
                    }
                    if f.offsets.is_empty() {
                        return Err(XVectorError::DimMismatch(format!("layer {i}: no context offsets")));
                    }
                    if f.params.input_dim() != f.input_dim * f.offsets.len() {
                        return Err(XVectorError::DimMismatch(format!(
                            "layer {i}: weights have {} columns, expected {} x {}",
                            f.params.input_dim(),
                            f.input_dim,
                            f.offsets.len()
                        )));
                    }
                    f.params.validate(&format!("layer {i}"))?;
                    (f.input_dim, f.output_dim())
                }
                Layer::StatsPool { input_dim } => {
                    if i != pool_index {
                        return Err(XVectorError::DimMismatch(format!("layer {i}: second pooling layer")));
                    }
                    (*input_dim, 2 * input_dim)
                }
                Layer::Segment(p) => {
                    if i < pool_index {
                        return Err(XVectorError::DimMismatch(format!("layer {i}: segment layer before pooling")));
                    }
                    p.validate(&format!("layer {i}"))?;
                    (p.input_dim(), p.output_dim())
                }
            };
            if let Some(prev) = dim {
                if prev != input {
                    return Err(XVectorError::DimMismatch(format!(
                        "layer {i} expects input dim {input}, previous layer produces {prev}"
                    )));
                }
            }
            dim = Some(output);
        }
        let net = Self { layers, pool_index };
        match net.layers.get(pool_index + 1) {
            Some(Layer::Segment(p)) if p.output_dim() == EMBEDDING_DIM => Ok(net),
            Some(Layer::Segment(p)) => {
                Err(XVectorError::DimMismatch(format!("embedding dim {} != {EMBEDDING_DIM}", p.output_dim())))
            }
            _ => Err(XVectorError::DimMismatch("no segment layer after pooling".into())),
        }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        match &self.layers[0] {
            Layer::Frame(f) => f.input_dim,
            _ => unreachable!("validated"),
        }
    }

    pub fn embedding_dim(&self) -> usize {
        EMBEDDING_DIM
    }

    pub fn frame_layers(&self) -> impl Iterator<Item = &FrameLayer> {
        self.layers[..self.pool_index].iter().map(|l| match l {
            Layer::Frame(f) => f,
            _ => unreachable!("validated"),
        })
    }

    pub fn embedding_layer(&self) -> &AffineParams {
        match &self.layers[self.pool_index + 1] {
            Layer::Segment(p) => p,
            _ => unreachable!("validated"),
        }
    }

    /// `(left, right)` frames consumed by the frame-level stack.
    pub fn context(&self) -> (usize, usize) {
        self.frame_layers().fold((0, 0), |(l, r), f| (l + f.left_context(), r + f.right_context()))
    }

    /// Smallest input that yields one output frame without padding.
    pub fn min_frames(&self) -> usize {
        let (l, r) = self.context();
        l + r + 1
    }

    /// Embedding for a window of feature rows (`T x input_dim`).
    ///
    /// Windows shorter than [`Self::min_frames`] are padded by repeating
    /// the first and last frames.
    pub fn forward_window(&self, feats: ArrayView2<f32>) -> Result<Vec<f32>> {
        if feats.nrows() == 0 {
            return Err(XVectorError::EmptyInput);
        }
        if feats.ncols() != self.input_dim() {
            return Err(XVectorError::DimMismatch(format!(
                "features have dim {}, network expects {}",
                feats.ncols(),
                self.input_dim()
            )));
        }
        let padded;
        let mut x = feats;
        let need = self.min_frames();
        if x.nrows() < need {
            let deficit = need - x.nrows();
            let pad_left = deficit / 2;
            let last = x.nrows() - 1;
            padded = Array2::from_shape_fn((need, x.ncols()), |(t, d)| {
                let src = t.saturating_sub(pad_left).min(last);
                x[[src, d]]
            });
            x = padded.view();
        }
        let mut h: Array2<f32> = x.to_owned();
        for layer in self.frame_layers() {
            h = layer.forward(h.view());
        }
        let pooled = stats_pool(h.view())?;
        let pooled = pooled.insert_axis(Axis(0));
        let emb = self.embedding_layer();
        let mut y = pooled.dot(&emb.weights.t());
        y += &emb.bias;
        Ok(y.into_raw_vec_and_offset().0)
    }

    /// Convenience wrapper taking row-major `f64` features.
    pub fn forward_rows(&self, rows: &[f64], num_frames: usize) -> Result<Vec<f32>> {
        let dim = rows.len().checked_div(num_frames).unwrap_or(self.input_dim());
        let arr = Array2::from_shape_vec((num_frames, dim), rows.iter().map(|&v| v as f32).collect())
            .map_err(|e| XVectorError::DimMismatch(e.to_string()))?;
        self.forward_window(arr.view())
    }
}

/// Per-dimension mean followed by per-dimension population standard
/// deviation.
pub fn stats_pool(frames: ArrayView2<f32>) -> Result<Array1<f32>> {
    let t = frames.nrows();
    if t == 0 {
        return Err(XVectorError::EmptyInput);
    }
    let d = frames.ncols();
    let mut mean = vec![0.0f64; d];
    for row in frames.axis_iter(Axis(0)) {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v as f64;
        }
    }
    for m in &mut mean {
        *m /= t as f64;
    }
    let mut var = vec![0.0f64; d];
    for row in frames.axis_iter(Axis(0)) {
        for ((acc, &v), m) in var.iter_mut().zip(row).zip(&mean) {
            let c = v as f64 - m;
            *acc += c * c;
        }
    }
    let mut out = Array1::<f32>::zeros(2 * d);
    for i in 0..d {
        out[i] = mean[i] as f32;
        out[d + i] = (var[i] / t as f64).max(0.0).sqrt() as f32;
    }
    Ok(out)
}
