use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{MetricsError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WerReport {
    pub tot: usize,
    pub err: usize,
    pub ins: usize,
    pub del: usize,
    pub sub: usize,
    /// Unrounded `err / tot * 100`.
    pub wer_percent: f64,
}

impl WerReport {
    fn from_counts(tot: usize, ins: usize, del: usize, sub: usize) -> Self {
        let err = ins + del + sub;
        let wer_percent = if tot == 0 { 0.0 } else { err as f64 / tot as f64 * 100.0 };
        Self { tot, err, ins, del, sub, wer_percent }
    }

    pub fn add(&self, other: &WerReport) -> WerReport {
        Self::from_counts(self.tot + other.tot, self.ins + other.ins, self.del + other.del, self.sub + other.sub)
    }
}

/// `(ins + del + sub) / tot * 100`, rounded to one decimal.
pub fn wer_from_counts(tot: usize, ins: usize, del: usize, sub: usize) -> Result<f64> {
    if tot == 0 {
        return Err(MetricsError::ZeroTotal);
    }
    let pct = (ins + del + sub) as f64 / tot as f64 * 100.0;
    Ok((pct * 10.0).round() / 10.0)
}

/// Minimum edit distance alignment with unit costs. Among alignments of
/// equal cost the one with the fewest substitutions wins, then the fewest
/// insertions.
pub fn align_wer<S: AsRef<str>>(reference: &[S], hyp: &[S]) -> Result<WerReport> {
    if reference.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    // Each cell holds (err, sub, ins); compared lexicographically.
    let m = hyp.len();
    let mut prev: Vec<(usize, usize, usize)> = (0..=m).map(|j| (j, 0, j)).collect();
    let mut cur = vec![(0, 0, 0); m + 1];
    for (i, r) in reference.iter().enumerate() {
        cur[0] = (i + 1, 0, 0);
        for j in 1..=m {
            let del = (prev[j].0 + 1, prev[j].1, prev[j].2);
            let ins = (cur[j - 1].0 + 1, cur[j - 1].1, cur[j - 1].2 + 1);
            let diag = if r.as_ref() == hyp[j - 1].as_ref() {
                prev[j - 1]
            } else {
                (prev[j - 1].0 + 1, prev[j - 1].1 + 1, prev[j - 1].2)
            };
            cur[j] = del.min(ins).min(diag);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let (err, sub, ins) = prev[m];
    Ok(WerReport::from_counts(reference.len(), ins, err - sub - ins, sub))
}

/// Lowercases, drops punctuation (apostrophes and hyphens survive between
/// two alphanumerics) and splits on whitespace.
pub fn normalize_text(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|tok| {
            let chars: Vec<char> = tok.chars().collect();
            let mut out = String::new();
            for (i, &c) in chars.iter().enumerate() {
                if c.is_alphanumeric() {
                    out.extend(c.to_lowercase());
                } else if c == '\'' || c == '-' {
                    let inner = i > 0
                        && chars[i - 1].is_alphanumeric()
                        && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
                    if inner {
                        out.push(c);
                    }
                }
            }
            (!out.is_empty()).then_some(out)
        })
        .collect()
}

pub fn tokenize(text: &str, normalize: bool) -> Vec<String> {
    if normalize {
        normalize_text(text)
    } else {
        text.split_whitespace().map(str::to_owned).collect()
    }
}

/// `file-id<TAB>words...` lines pooled per file id in file order.
pub fn parse_transcripts(text: &str, normalize: bool) -> Result<BTreeMap<String, Vec<String>>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line = line.trim_start();
        let (id, words) = line.split_once('\t').or_else(|| line.split_once(char::is_whitespace)).unwrap_or((line, ""));
        let id = id.trim();
        if id.is_empty() {
            return Err(MetricsError::Parse { line: i + 1, msg: "missing file id".into() });
        }
        out.entry(id.to_owned()).or_default().extend(tokenize(words, normalize));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptScore {
    pub total: WerReport,
    pub per_file: BTreeMap<String, WerReport>,
}

/// Scores every reference file against the hypothesis for the same id.
/// Missing hypotheses count as all deletions; hypothesis files with no
/// reference count as all insertions.
pub fn score_transcripts(
    reference: &BTreeMap<String, Vec<String>>,
    hyp: &BTreeMap<String, Vec<String>>,
) -> Result<TranscriptScore> {
    let empty = Vec::new();
    let mut per_file = BTreeMap::new();
    let mut total = WerReport::from_counts(0, 0, 0, 0);
    for (id, words) in reference {
        let h = hyp.get(id).unwrap_or(&empty);
        let r = if words.is_empty() { WerReport::from_counts(0, h.len(), 0, 0) } else { align_wer(words, h)? };
        total = total.add(&r);
        per_file.insert(id.clone(), r);
    }
    for (id, words) in hyp {
        if !reference.contains_key(id) {
            let r = WerReport::from_counts(0, words.len(), 0, 0);
            total = total.add(&r);
            per_file.insert(id.clone(), r);
        }
    }
    if total.tot == 0 {
        return Err(MetricsError::EmptyReference);
    }
    Ok(TranscriptScore { total, per_file })
}
