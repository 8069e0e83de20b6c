//! Audio decoding and the MFCC + CMVN feature front-end.

mod cmvn;
mod features;
mod mfcc;
mod wav;

pub use cmvn::{apply_cmvn, DEFAULT_CMVN_WINDOW};
pub use features::FeatureMatrix;
pub use mfcc::{compute_mfcc, hz_to_mel, mel_filterbank, MfccConfig, WindowKind, LOG_FLOOR};
pub use wav::{read_wav, write_wav, AudioBuffer};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FrontendError {
    #[error("UnsupportedEncoding: {0}")]
    UnsupportedEncoding(String),
    #[error("ChannelMismatch: expected 1 channel, found {0} (enable downmix to average)")]
    ChannelMismatch(u16),
    #[error("TruncatedFile: {0}")]
    TruncatedFile(String),
    #[error("AudioTooShort: {samples} samples, need at least {needed}")]
    AudioTooShort { samples: usize, needed: usize },
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error("EmptyFeatures: feature matrix has no frames")]
    EmptyFeatures,
    #[error("BadFeatureFile: {0}")]
    BadFeatureFile(String),
    #[error("IoFailure: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FrontendError>;
