//! Labelled time intervals and their text serialisations.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Half-open interval `[start_s, end_s)` carrying a class or speaker label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start_s: f64,
    pub end_s: f64,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl Segment {
    pub fn new(start_s: f64, end_s: f64, label: impl Into<String>) -> Self {
        Self { start_s, end_s, label: label.into(), score: None }
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start_s && t < self.end_s
    }
}

#[derive(Debug, Error)]
pub enum SegmentFormatError {
    #[error("Parse: line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// `start<TAB>end<TAB>label` with three decimals.
pub fn to_tsv(segments: &[Segment]) -> String {
    let mut s = String::new();
    for seg in segments {
        let _ = writeln!(s, "{:.3}\t{:.3}\t{}", seg.start_s, seg.end_s, seg.label);
    }
    s
}

/// Parses `start end label` lines; blank lines and `#` comments are skipped.
pub fn from_tsv(text: &str) -> Result<Vec<Segment>, SegmentFormatError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| SegmentFormatError::Parse { line: i + 1, msg };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 3 {
            return Err(err(format!("expected 3 fields, found {}", fields.len())));
        }
        let start: f64 = fields[0].parse().map_err(|_| err(format!("bad start '{}'", fields[0])))?;
        let end: f64 = fields[1].parse().map_err(|_| err(format!("bad end '{}'", fields[1])))?;
        if !(start.is_finite() && end.is_finite() && end > start) {
            return Err(err(format!("invalid interval [{start}, {end})")));
        }
        out.push(Segment::new(start, end, fields[2..].join(" ")));
    }
    Ok(out)
}

/// `SPEAKER <file-id> 1 <start> <dur> <NA> <NA> <label> <NA> <NA>`.
pub fn to_rttm(file_id: &str, segments: &[Segment]) -> String {
    let mut s = String::new();
    for seg in segments {
        let _ = writeln!(
            s,
            "SPEAKER {file_id} 1 {:.3} {:.3} <NA> <NA> {} <NA> <NA>",
            seg.start_s,
            seg.duration_s(),
            seg.label
        );
    }
    s
}

/// Union of all intervals regardless of label, sorted and coalesced.
pub fn union_intervals(segments: &[Segment]) -> Vec<(f64, f64)> {
    let mut iv: Vec<(f64, f64)> = segments.iter().map(|s| (s.start_s, s.end_s)).collect();
    iv.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (a, b) in iv {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}
