//! Frame-level VAD scoring and word error rate.

mod roc;
mod vad;
mod wer;

pub use roc::{roc_curve, tpr_at_fpr, RocCurve, RocPoint, DEFAULT_TARGET_FPR};
pub use vad::{
    frame_vad_eval, parse_condition_tsv, rasterize, rasterize_conditions, ConditionInterval, ConditionLabel,
    VadEvalReport, DEFAULT_SCORING_PERIOD_S,
};
pub use wer::{
    align_wer, normalize_text, parse_transcripts, score_transcripts, tokenize, wer_from_counts, TranscriptScore,
    WerReport,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("SegmentOutOfBounds: [{start_s}, {end_s}) outside [0, {duration_s}]")]
    SegmentOutOfBounds { start_s: f64, end_s: f64, duration_s: f64 },
    #[error("DegenerateLabels: need at least one positive and one negative")]
    DegenerateLabels,
    #[error("LengthMismatch: hypothesis has {hyp} frames, reference {reference}")]
    LengthMismatch { hyp: usize, reference: usize },
    #[error("EmptyReference: reference contains no words")]
    EmptyReference,
    #[error("ZeroTotal: reference word count is zero")]
    ZeroTotal,
    #[error("InvalidInput: {0}")]
    InvalidInput(String),
    #[error("ParseError: line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, MetricsError>;
