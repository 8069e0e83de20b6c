//! Offline speech segmentation built on x-vector embeddings.
//!
//! The crate is organised along the processing chain:
//!
//! - [`frontend`]: WAV decoding, MFCC extraction and sliding CMVN.
//! - [`xvector`]: TDNN inference producing 512-dimensional embeddings on a
//!   1.5 s / 0.75 s sliding window, plus the weight and archive formats.
//! - [`classifier`]: L1 normalisation, linear SVM, Platt calibration and
//!   threshold selection for speech/noise decisions.
//! - [`baseline`]: an energy-based 30 ms frame VAD with median filtering and
//!   gap merging.
//! - [`pipeline`]: the three segmentation strategies and cosine AHC.
//! - [`metrics`]: frame-level ROC / TPR-at-FPR scoring and WER alignment.
//! - [`dataprep`]: word-alignment realignment and leakage-free dataset splits.
//! - [`analysis`]: PCA and exact t-SNE for embedding inspection.
//! - [`synth`]: seeded synthetic audio and random-weight networks for tests.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod baseline;
pub mod classifier;
pub mod dataprep;
pub mod frontend;
pub mod metrics;
pub mod pipeline;
pub mod segment;
pub mod synth;
pub mod xvector;

pub use baseline::FrameDecisionTrack;
pub use classifier::{CalibratedLinearModel, Label, LabeledEmbedding};
pub use frontend::{AudioBuffer, FeatureMatrix, MfccConfig};
pub use pipeline::{PipelineConfig, Strategy};
pub use segment::Segment;
pub use xvector::{ExtractionConfig, XVector, XVectorNet, EMBEDDING_DIM};

/// Version of the toolkit's on-disk formats (feature, weight, archive, model).
pub const FORMAT_VERSION: u16 = 1;
