//! TDNN x-vector inference and embedding persistence.
//!
//! The network follows the standard x-vector layout: five frame-level
//! layers with temporal context, statistics pooling, then segment-level
//! affines. The embedding is the output of the first segment affine, taken
//! before its nonlinearity.

mod archive;
mod extract;
mod net;
mod weights;

pub use archive::{archive_file_size, read_archive, write_archive};
pub use extract::{extract_sequence, extract_windows, window_grid, ExtractionConfig};
pub use net::{stats_pool, AffineParams, FrameLayer, Layer, XVectorNet, BN_EPSILON};
pub use weights::{load_weights, read_weights, save_weights, write_weights};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const EMBEDDING_DIM: usize = 512;
pub const FEATURE_DIM: usize = 30;

/// One embedding and the window of audio it summarises.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XVector {
    pub values: Vec<f32>,
    pub window_start_s: f64,
    pub window_end_s: f64,
}

impl XVector {
    pub fn center_s(&self) -> f64 {
        0.5 * (self.window_start_s + self.window_end_s)
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }
}

#[derive(Debug, Error)]
pub enum XVectorError {
    #[error("BadMagic: expected {expected:?}")]
    BadMagic { expected: &'static str },
    #[error("UnsupportedVersion: {0}")]
    UnsupportedVersion(u16),
    #[error("DimMismatch: {0}")]
    DimMismatch(String),
    #[error("NonFiniteWeight: {0}")]
    NonFiniteWeight(String),
    #[error("EmptyInput: no frames to process")]
    EmptyInput,
    #[error("StreamTooShort: {duration_s:.3} s is below the minimum window of {min_s:.3} s")]
    StreamTooShort { duration_s: f64, min_s: f64 },
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error("CorruptArchive: {0}")]
    CorruptArchive(String),
    #[error("IoFailure: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, XVectorError>;
