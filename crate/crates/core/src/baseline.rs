//! Baseline frame VAD: 30 ms decisions, median smoothing, gap merging.
//!
//! The frame classifier is an adaptive-energy detector standing in for the
//! WebRTC GMM VAD. It keeps the same framing, the 4-level aggressiveness
//! setting and the same post-processing, but it is not bit-compatible.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::AudioBuffer;
pub use crate::segment::Segment;

pub const DEFAULT_FRAME_PERIOD_S: f64 = 0.030;

/// Margin above the noise floor (dB) for aggressiveness 0..=3.
const MODE_MARGIN_DB: [f64; 4] = [6.0, 9.0, 12.0, 15.0];
const FLOOR_ATTACK: f64 = 0.05;
const INITIAL_FLOOR_DB: f64 = -100.0;
const ENERGY_EPS: f64 = 1e-10;
const GAP_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("AudioTooShort: {samples} samples, one frame needs {needed}")]
    AudioTooShort { samples: usize, needed: usize },
    #[error("UnsortedInput: segment {index} starts before its predecessor")]
    UnsortedInput { index: usize },
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, BaselineError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDecisionTrack {
    pub frame_period_s: f64,
    pub decisions: Vec<u8>,
    pub scores: Option<Vec<f64>>,
    pub start_time_s: f64,
}

impl FrameDecisionTrack {
    pub fn new(decisions: Vec<u8>, frame_period_s: f64) -> Self {
        Self { frame_period_s, decisions, scores: None, start_time_s: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }

    pub fn speech_frames(&self) -> usize {
        self.decisions.iter().filter(|&&d| d == 1).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub aggressiveness: u8,
    pub frame_period_s: f64,
    pub median_width: usize,
    pub merge_gap_s: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self { aggressiveness: 0, frame_period_s: DEFAULT_FRAME_PERIOD_S, median_width: 5, merge_gap_s: 0.5 }
    }
}

fn frame_energy_db(frame: &[f32]) -> f64 {
    let ms = frame.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>() / frame.len() as f64;
    10.0 * (ms + ENERGY_EPS).log10()
}

/// Energy VAD over non-overlapping frames of `frame_period_s`.
pub fn energy_vad_frames_with_period(
    audio: &AudioBuffer,
    aggressiveness: u8,
    frame_period_s: f64,
) -> Result<FrameDecisionTrack> {
    let margin = *MODE_MARGIN_DB
        .get(aggressiveness as usize)
        .ok_or_else(|| BaselineError::InvalidConfig(format!("aggressiveness {aggressiveness} not in 0..=3")))?;
    if !(frame_period_s > 0.0) {
        return Err(BaselineError::InvalidConfig("frame period must be positive".into()));
    }
    let frame_len = (frame_period_s * audio.sample_rate as f64).round() as usize;
    if frame_len == 0 {
        return Err(BaselineError::InvalidConfig("frame shorter than one sample".into()));
    }
    if audio.len() < frame_len {
        return Err(BaselineError::AudioTooShort { samples: audio.len(), needed: frame_len });
    }
    let mut floor = INITIAL_FLOOR_DB;
    let mut decisions = Vec::with_capacity(audio.len() / frame_len);
    let mut scores = Vec::with_capacity(audio.len() / frame_len);
    for frame in audio.samples.chunks_exact(frame_len) {
        let e = frame_energy_db(frame);
        if e > floor {
            floor += FLOOR_ATTACK * (e - floor);
        } else {
            floor = e;
        }
        let excess = e - floor - margin;
        decisions.push(u8::from(excess > 0.0));
        scores.push(1.0 / (1.0 + (-excess / 3.0).exp()));
    }
    Ok(FrameDecisionTrack { frame_period_s, decisions, scores: Some(scores), start_time_s: 0.0 })
}

/// Energy VAD on the standard 30 ms grid.
pub fn energy_vad_frames(audio: &AudioBuffer, aggressiveness: u8) -> Result<FrameDecisionTrack> {
    energy_vad_frames_with_period(audio, aggressiveness, DEFAULT_FRAME_PERIOD_S)
}

/// Centered median; near the edges the window shrinks symmetrically.
pub fn median_filter(track: &FrameDecisionTrack, width: usize) -> Result<FrameDecisionTrack> {
    if width == 0 || width.is_multiple_of(2) {
        return Err(BaselineError::InvalidConfig(format!("median width must be odd, got {width}")));
    }
    let d = &track.decisions;
    let n = d.len();
    // Prefix counts of ones.
    let mut ones = vec![0usize; n + 1];
    for (i, &v) in d.iter().enumerate() {
        ones[i + 1] = ones[i] + usize::from(v == 1);
    }
    let decisions = (0..n)
        .map(|i| {
            let half = (width / 2).min(i).min(n - 1 - i);
            let (a, b) = (i - half, i + half + 1);
            u8::from(2 * (ones[b] - ones[a]) > b - a)
        })
        .collect();
    Ok(FrameDecisionTrack { decisions, ..track.clone() })
}

/// Maximal runs of speech frames as `speech` segments.
pub fn decisions_to_segments(track: &FrameDecisionTrack) -> Vec<Segment> {
    let p = track.frame_period_s;
    let mut out = Vec::new();
    let mut run_start = None;
    for (i, &d) in track.decisions.iter().chain(std::iter::once(&0)).enumerate() {
        match (d == 1, run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(s)) => {
                out.push(Segment::new(track.start_time_s + s as f64 * p, track.start_time_s + i as f64 * p, "speech"));
                run_start = None;
            }
            _ => {}
        }
    }
    out
}

/// Merges neighbours separated by at most `max_gap_s`. Chains collapse.
pub fn merge_segments(segs: &[Segment], max_gap_s: f64) -> Result<Vec<Segment>> {
    let mut out: Vec<Segment> = Vec::with_capacity(segs.len());
    for (i, s) in segs.iter().enumerate() {
        if i > 0 && s.start_s < segs[i - 1].start_s {
            return Err(BaselineError::UnsortedInput { index: i });
        }
        match out.last_mut() {
            Some(last) if s.start_s - last.end_s <= max_gap_s + GAP_EPS => {
                last.end_s = last.end_s.max(s.end_s);
                last.score = match (last.score, s.score) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    (a, b) => a.or(b),
                };
            }
            _ => out.push(s.clone()),
        }
    }
    Ok(out)
}

/// Energy VAD, median filter, segments, merge.
pub fn run_baseline(audio: &AudioBuffer, cfg: &BaselineConfig) -> Result<Vec<Segment>> {
    let track = energy_vad_frames_with_period(audio, cfg.aggressiveness, cfg.frame_period_s)?;
    let smoothed = median_filter(&track, cfg.median_width)?;
    merge_segments(&decisions_to_segments(&smoothed), cfg.merge_gap_s)
}
