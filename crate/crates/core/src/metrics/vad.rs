use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{MetricsError, Result};
use crate::baseline::FrameDecisionTrack;
use crate::segment::Segment;

pub const DEFAULT_SCORING_PERIOD_S: f64 = 0.010;
const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionLabel {
    CleanSpeech,
    SpeechWithNoise,
    SpeechWithMusic,
    NoSpeech,
}

impl ConditionLabel {
    pub const ALL: [ConditionLabel; 4] =
        [Self::CleanSpeech, Self::SpeechWithNoise, Self::SpeechWithMusic, Self::NoSpeech];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::CleanSpeech => "clean_speech",
            Self::SpeechWithNoise => "speech_with_noise",
            Self::SpeechWithMusic => "speech_with_music",
            Self::NoSpeech => "no_speech",
        }
    }

    pub fn is_speech(self) -> bool {
        self != Self::NoSpeech
    }
}

impl FromStr for ConditionLabel {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| MetricsError::InvalidInput(format!("unknown condition '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionInterval {
    pub start_s: f64,
    pub end_s: f64,
    pub condition: ConditionLabel,
}

fn num_frames(duration_s: f64, period_s: f64) -> usize {
    (duration_s / period_s - EPS).ceil().max(0.0) as usize
}

/// Index range of frames whose centres fall in `[start, end)`.
fn frames_centered_in(start: f64, end: f64, period: f64, n: usize) -> std::ops::Range<usize> {
    let center = |i: usize| (i as f64 + 0.5) * period;
    let mut a = ((start / period - 0.5).floor().max(0.0) as usize).min(n);
    while a > 0 && center(a - 1) >= start {
        a -= 1;
    }
    while a < n && center(a) < start {
        a += 1;
    }
    let mut b = a;
    while b < n && center(b) < end {
        b += 1;
    }
    a..b
}

fn check_bounds(start: f64, end: f64, duration: f64) -> Result<()> {
    if start < -EPS || end > duration + EPS || end < start {
        return Err(MetricsError::SegmentOutOfBounds { start_s: start, end_s: end, duration_s: duration });
    }
    Ok(())
}

/// Frame `i` is speech iff its centre `(i + 0.5) * period` lies in a segment.
pub fn rasterize(segments: &[Segment], frame_period_s: f64, duration_s: f64) -> Result<FrameDecisionTrack> {
    if !(frame_period_s > 0.0) || !(duration_s >= 0.0) {
        return Err(MetricsError::InvalidInput("period must be positive and duration non-negative".into()));
    }
    let n = num_frames(duration_s, frame_period_s);
    let mut decisions = vec![0u8; n];
    for s in segments {
        check_bounds(s.start_s, s.end_s, duration_s)?;
        for i in frames_centered_in(s.start_s, s.end_s, frame_period_s, n) {
            decisions[i] = 1;
        }
    }
    Ok(FrameDecisionTrack::new(decisions, frame_period_s))
}

/// Reference lines `start end condition`.
pub fn parse_condition_tsv(text: &str) -> Result<Vec<ConditionInterval>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| MetricsError::Parse { line: i + 1, msg };
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(err(format!("expected 3 fields, found {}", f.len())));
        }
        let start: f64 = f[0].parse().map_err(|_| err(format!("bad start '{}'", f[0])))?;
        let end: f64 = f[1].parse().map_err(|_| err(format!("bad end '{}'", f[1])))?;
        if !(start.is_finite() && end.is_finite() && end > start) {
            return Err(err(format!("invalid interval [{start}, {end})")));
        }
        let condition = f[2].parse().map_err(|e: MetricsError| err(e.to_string()))?;
        out.push(ConditionInterval { start_s: start, end_s: end, condition });
    }
    Ok(out)
}

/// Per-frame reference condition; frames outside every interval are
/// `no_speech`. Later intervals override earlier ones.
pub fn rasterize_conditions(
    intervals: &[ConditionInterval],
    frame_period_s: f64,
    duration_s: f64,
) -> Result<Vec<ConditionLabel>> {
    if !(frame_period_s > 0.0) || !(duration_s >= 0.0) {
        return Err(MetricsError::InvalidInput("period must be positive and duration non-negative".into()));
    }
    let n = num_frames(duration_s, frame_period_s);
    let mut out = vec![ConditionLabel::NoSpeech; n];
    for iv in intervals {
        check_bounds(iv.start_s, iv.end_s, duration_s)?;
        for i in frames_centered_in(iv.start_s, iv.end_s, frame_period_s, n) {
            out[i] = iv.condition;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VadEvalReport {
    pub clean: Option<f64>,
    pub noise: Option<f64>,
    pub music: Option<f64>,
    /// Pooled over the three speech conditions.
    pub all: Option<f64>,
    pub fpr: Option<f64>,
    pub frames: [usize; 4],
    pub hits: [usize; 4],
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Per-condition TPR and the false alarm rate on `no_speech` frames.
pub fn frame_vad_eval(hyp: &FrameDecisionTrack, reference: &[ConditionLabel]) -> Result<VadEvalReport> {
    if hyp.len() != reference.len() {
        return Err(MetricsError::LengthMismatch { hyp: hyp.len(), reference: reference.len() });
    }
    let mut frames = [0usize; 4];
    let mut hits = [0usize; 4];
    for (&d, &c) in hyp.decisions.iter().zip(reference) {
        let k = c as usize;
        frames[k] += 1;
        hits[k] += usize::from(d == 1);
    }
    let speech_frames = frames[..3].iter().sum();
    let speech_hits = hits[..3].iter().sum();
    Ok(VadEvalReport {
        clean: ratio(hits[0], frames[0]),
        noise: ratio(hits[1], frames[1]),
        music: ratio(hits[2], frames[2]),
        all: ratio(speech_hits, speech_frames),
        fpr: ratio(hits[3], frames[3]),
        frames,
        hits,
    })
}
