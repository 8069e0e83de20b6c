//! Ground-truth realignment from word timings and dataset manifests.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{Label, LabeledEmbedding};
use crate::segment::Segment;
use crate::xvector::read_archive;

pub const DEFAULT_MAX_GAP_S: f64 = 0.5;
pub const DEFAULT_MIN_DUR_S: f64 = 0.5;

#[derive(Debug, Error)]
pub enum DataprepError {
    #[error("UnsortedInput: entry {index} starts before its predecessor")]
    UnsortedInput { index: usize },
    #[error("EmptyClass: no {0} entries")]
    EmptyClass(Label),
    #[error("InsufficientSources: {label} has {found} source ids, a split needs at least 2")]
    InsufficientSources { label: Label, found: usize },
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error("ParseError: line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("ArchiveError: {0}")]
    Archive(#[from] crate::xvector::XVectorError),
    #[error("IoFailure: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DataprepError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordAlignment {
    pub file_id: String,
    pub word: String,
    pub start_s: f64,
    pub end_s: f64,
}

/// CTM lines `file-id channel start dur word [confidence]`; `;;` starts a comment.
pub fn parse_ctm(text: &str) -> Result<Vec<WordAlignment>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with(";;") {
            continue;
        }
        let err = |msg: String| DataprepError::Parse { line: i + 1, msg };
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() < 5 {
            return Err(err(format!("expected at least 5 fields, found {}", f.len())));
        }
        let start: f64 = f[2].parse().map_err(|_| err(format!("bad start '{}'", f[2])))?;
        let dur: f64 = f[3].parse().map_err(|_| err(format!("bad duration '{}'", f[3])))?;
        if !(start.is_finite() && start >= 0.0 && dur.is_finite() && dur > 0.0) {
            return Err(err(format!("invalid timing start={start} dur={dur}")));
        }
        out.push(WordAlignment { file_id: f[0].to_owned(), word: f[4].to_owned(), start_s: start, end_s: start + dur });
    }
    Ok(out)
}

/// Joins words separated by at most `max_gap_s` into segments and drops
/// segments shorter than `min_dur_s`.
pub fn realign_segments(words: &[WordAlignment], max_gap_s: f64, min_dur_s: f64) -> Result<Vec<Segment>> {
    if !(max_gap_s >= 0.0) || !(min_dur_s >= 0.0) {
        return Err(DataprepError::InvalidConfig("gap and minimum duration must be non-negative".into()));
    }
    let mut runs: Vec<(f64, f64)> = Vec::new();
    for (i, w) in words.iter().enumerate() {
        if i > 0 && w.start_s < words[i - 1].start_s {
            return Err(DataprepError::UnsortedInput { index: i });
        }
        match runs.last_mut() {
            Some(run) if w.start_s - run.1 <= max_gap_s => run.1 = run.1.max(w.end_s),
            _ => runs.push((w.start_s, w.end_s)),
        }
    }
    Ok(runs.into_iter().filter(|(s, e)| e - s >= min_dur_s).map(|(s, e)| Segment::new(s, e, "speech")).collect())
}

/// [`realign_segments`] applied per file id.
pub fn realign_by_file(
    words: &[WordAlignment],
    max_gap_s: f64,
    min_dur_s: f64,
) -> Result<BTreeMap<String, Vec<Segment>>> {
    let mut groups: BTreeMap<String, Vec<WordAlignment>> = BTreeMap::new();
    for w in words {
        groups.entry(w.file_id.clone()).or_default().push(w.clone());
    }
    groups.into_iter().map(|(id, ws)| Ok((id, realign_segments(&ws, max_gap_s, min_dur_s)?))).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub label: Label,
    pub source_id: String,
}

/// `path<TAB>label<TAB>source-id` per line.
pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| DataprepError::Parse { line: i + 1, msg };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(err(format!("expected 3 tab-separated fields, found {}", f.len())));
        }
        let label: Label = f[1].parse().map_err(|e: crate::classifier::ClassifierError| err(e.to_string()))?;
        out.push(ManifestEntry { path: f[0].to_owned(), label, source_id: f[2].trim().to_owned() });
    }
    Ok(out)
}

pub fn manifest_to_text(entries: &[ManifestEntry]) -> String {
    let mut s = String::new();
    for e in entries {
        let _ = writeln!(s, "{}\t{}\t{}", e.path, e.label, e.source_id);
    }
    s
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    parse_manifest(&std::fs::read_to_string(path)?)
}

/// Splits each class by source id so that no source lands in both splits.
///
/// Per class, `round(fraction * n_sources)` sources go to train, clamped so
/// each split keeps at least one. A source id shared by both classes keeps
/// the split it received first.
pub fn build_dataset(
    speech: &[ManifestEntry],
    noise: &[ManifestEntry],
    split_fraction: f64,
    seed: u64,
) -> Result<(Vec<ManifestEntry>, Vec<ManifestEntry>)> {
    if !(split_fraction > 0.0 && split_fraction < 1.0) {
        return Err(DataprepError::InvalidConfig(format!("split fraction {split_fraction} must be in (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train: BTreeMap<String, bool> = BTreeMap::new();
    for (label, entries) in [(Label::Speech, speech), (Label::Noise, noise)] {
        if entries.is_empty() {
            return Err(DataprepError::EmptyClass(label));
        }
        let sources: BTreeSet<&str> = entries.iter().map(|e| e.source_id.as_str()).collect();
        let n = sources.len();
        if n < 2 {
            return Err(DataprepError::InsufficientSources { label, found: n });
        }
        let target = ((split_fraction * n as f64).round() as usize).clamp(1, n - 1);
        let mut fixed_train = 0;
        let mut fixed_eval = 0;
        let mut free: Vec<&str> = Vec::new();
        for s in sources {
            match in_train.get(s) {
                Some(true) => fixed_train += 1,
                Some(false) => fixed_eval += 1,
                None => free.push(s),
            }
        }
        free.shuffle(&mut rng);
        let want_train = target.saturating_sub(fixed_train).min(free.len());
        // Keep one source for eval when nothing fixed is there yet.
        let want_train =
            if fixed_eval == 0 && want_train == free.len() && !free.is_empty() { want_train - 1 } else { want_train };
        for (i, s) in free.into_iter().enumerate() {
            in_train.insert(s.to_owned(), i < want_train);
        }
    }
    let (mut train, mut eval) = (Vec::new(), Vec::new());
    for e in speech.iter().chain(noise) {
        if in_train[&e.source_id] {
            train.push(e.clone());
        } else {
            eval.push(e.clone());
        }
    }
    Ok((train, eval))
}

/// Every vector of the entry's archive, labelled with the entry's class.
pub fn embeddings_from_archive(entry: &ManifestEntry) -> Result<Vec<LabeledEmbedding>> {
    Ok(read_archive(&entry.path)?
        .into_iter()
        .map(|v| LabeledEmbedding { values: v.as_f64(), label: entry.label, source_id: entry.source_id.clone() })
        .collect())
}
