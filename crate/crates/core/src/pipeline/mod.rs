//! End-to-end segmentation with three strategies:
//!
//! - `baseline`: energy VAD segments, then x-vectors inside them, then
//!   clustering.
//! - `xvector_filt`: drop noise x-vectors, cluster the rest, join adjacent
//!   same-cluster windows into segments.
//! - `xvector_seg_filt`: cluster everything, form segments, drop segments
//!   whose share of noise x-vectors exceeds ρ.

mod cluster;

pub use cluster::{cluster_ahc, cluster_xvectors, cosine_distance, ClusteredSequence, ClusteredVector};

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::{self, merge_segments, BaselineConfig};
use crate::classifier::{self, CalibratedLinearModel, Label};
use crate::frontend::{self, apply_cmvn, compute_mfcc, AudioBuffer, FeatureMatrix, MfccConfig, DEFAULT_CMVN_WINDOW};
use crate::segment::Segment;
use crate::xvector::{self, extract_windows, window_grid, ExtractionConfig, XVector, XVectorNet};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("EmptyInput: nothing to cluster")]
    EmptyInput,
    #[error("MissingModel: strategy {0} needs a classifier model")]
    MissingModel(Strategy),
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Frontend(#[from] frontend::FrontendError),
    #[error(transparent)]
    XVector(#[from] xvector::XVectorError),
    #[error(transparent)]
    Classifier(#[from] classifier::ClassifierError),
    #[error(transparent)]
    Baseline(#[from] baseline::BaselineError),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Baseline,
    XvectorFilt,
    XvectorSegFilt,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Baseline, Strategy::XvectorFilt, Strategy::XvectorSegFilt];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Baseline => "baseline",
            Strategy::XvectorFilt => "xvector_filt",
            Strategy::XvectorSegFilt => "xvector_seg_filt",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| PipelineError::InvalidConfig(format!("unknown strategy '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub strategy: Strategy,
    /// Minimum speech probability for an x-vector to count as speech.
    pub vad_threshold: f64,
    /// ρ: segments with a larger share of noise x-vectors are rejected.
    pub noise_proportion_threshold: f64,
    /// δ: AHC stops once the closest clusters are farther apart than this.
    pub cluster_threshold: f64,
    /// Subtract the per-recording mean x-vector before clustering.
    pub center_embeddings: bool,
    pub merge_gap_s: f64,
    pub cmvn_window: usize,
    pub mfcc: MfccConfig,
    pub extraction: ExtractionConfig,
    pub baseline: BaselineConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::XvectorFilt,
            vad_threshold: 0.5,
            noise_proportion_threshold: 0.5,
            cluster_threshold: 0.35,
            center_embeddings: true,
            merge_gap_s: 0.5,
            cmvn_window: DEFAULT_CMVN_WINDOW,
            mfcc: MfccConfig::default(),
            extraction: ExtractionConfig::default(),
            baseline: BaselineConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(PipelineError::InvalidConfig(format!("{name} {v} outside [0, 1]")))
            }
        };
        unit("vad_threshold", self.vad_threshold)?;
        unit("noise_proportion_threshold", self.noise_proportion_threshold)?;
        if !(self.cluster_threshold >= 0.0) {
            return Err(PipelineError::InvalidConfig("cluster_threshold must be non-negative".into()));
        }
        if !(self.merge_gap_s >= 0.0) {
            return Err(PipelineError::InvalidConfig("merge_gap_s must be non-negative".into()));
        }
        self.extraction.validate()?;
        Ok(())
    }
}

/// MFCCs followed by sliding CMVN.
pub fn compute_features(audio: &AudioBuffer, mfcc: &MfccConfig, cmvn_window: usize) -> Result<FeatureMatrix> {
    Ok(apply_cmvn(&compute_mfcc(audio, mfcc)?, cmvn_window)?)
}

/// Splits indices by `probability >= threshold`, preserving order.
pub fn filter_by_probability(probabilities: &[f64], threshold: f64) -> (Vec<usize>, Vec<usize>) {
    (0..probabilities.len()).partition(|&i| probabilities[i] >= threshold)
}

/// An x-vector with its speech probability.
pub type ScoredXVector = (XVector, f64);

/// X-vectors with speech probability at least `threshold`, and the rest.
pub fn filter_xvectors(
    vectors: &[XVector],
    model: &CalibratedLinearModel,
    threshold: f64,
) -> Result<(Vec<ScoredXVector>, Vec<ScoredXVector>)> {
    let probs = vectors.iter().map(|v| Ok(classifier::predict(model, &v.as_f64())?.1)).collect::<Result<Vec<f64>>>()?;
    let (kept, dropped) = filter_by_probability(&probs, threshold);
    let pick = |idx: Vec<usize>| idx.into_iter().map(|i| (vectors[i].clone(), probs[i])).collect();
    Ok((pick(kept), pick(dropped)))
}

fn speaker_label(cluster: usize) -> String {
    format!("spk{cluster}")
}

/// Drops segments whose share of noise x-vectors exceeds `rho`, and
/// segments with no x-vectors. Each vector belongs to the segment holding
/// its window centre, preferring one labelled with its own cluster. A vector
/// is noise when its probability is below `vad_threshold`.
pub fn filter_segments(
    clustered: &ClusteredSequence,
    segments: &[Segment],
    rho: f64,
    vad_threshold: f64,
) -> Vec<Segment> {
    let mut total = vec![0usize; segments.len()];
    let mut noise = vec![0usize; segments.len()];
    for e in &clustered.entries {
        let c = e.xvector.center_s();
        let own = speaker_label(e.cluster);
        let home = segments
            .iter()
            .position(|s| s.contains(c) && s.label == own)
            .or_else(|| segments.iter().position(|s| s.contains(c)));
        if let Some(k) = home {
            total[k] += 1;
            if e.probability.is_some_and(|p| p < vad_threshold) {
                noise[k] += 1;
            }
        }
    }
    segments
        .iter()
        .enumerate()
        .filter(|&(k, _)| total[k] > 0 && (noise[k] as f64 / total[k] as f64) <= rho)
        .map(|(_, s)| s.clone())
        .collect()
}

/// Joins runs of consecutive windows sharing a cluster. `slots` holds
/// `(run key, grid position, xvector index)`; positions must increase by
/// one within a key for windows to be adjacent.
fn runs_to_segments(slots: &[(usize, usize, usize)], vectors: &[XVector], clusters: &[usize]) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut k = 0;
    while k < slots.len() {
        let (key, mut pos, first) = slots[k];
        let cluster = clusters[first];
        let mut last = first;
        let mut m = k + 1;
        while m < slots.len() && slots[m].0 == key && slots[m].1 == pos + 1 && clusters[slots[m].2] == cluster {
            pos = slots[m].1;
            last = slots[m].2;
            m += 1;
        }
        out.push(Segment::new(vectors[first].window_start_s, vectors[last].window_end_s, speaker_label(cluster)));
        k = m;
    }
    out
}

/// Merges per label, then sorts by start time and label.
fn merge_per_label(segments: Vec<Segment>, gap: f64) -> Result<Vec<Segment>> {
    let mut by_label: BTreeMap<String, Vec<Segment>> = BTreeMap::new();
    for s in segments {
        by_label.entry(s.label.clone()).or_default().push(s);
    }
    let mut out = Vec::new();
    for (_, mut segs) in by_label {
        segs.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
        out.extend(merge_segments(&segs, gap)?);
    }
    out.sort_by(|a, b| a.start_s.total_cmp(&b.start_s).then_with(|| a.label.cmp(&b.label)));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionEntry {
    pub start_s: f64,
    pub end_s: f64,
    pub probability: Option<f64>,
    pub label: Option<Label>,
    pub cluster: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutput {
    pub segments: Vec<Segment>,
    pub xvectors: Vec<XVector>,
    pub decisions: Vec<DecisionEntry>,
}

impl PipelineOutput {
    /// `start end probability label cluster` per x-vector; `NA` where absent.
    pub fn decision_log(&self) -> String {
        let mut s = String::new();
        for d in &self.decisions {
            let p = d.probability.map_or("NA".to_string(), |p| format!("{p:.6}"));
            let l = d.label.map_or("NA", Label::as_str);
            let c = d.cluster.map_or("NA".to_string(), |c| c.to_string());
            let _ = writeln!(s, "{:.3} {:.3} {p} {l} {c}", d.start_s, d.end_s);
        }
        s
    }
}

fn is_digital_silence(audio: &AudioBuffer, start_s: f64, end_s: f64) -> bool {
    audio.slice_seconds(start_s, end_s).samples.iter().all(|&x| x == 0.0)
}

/// Speech probability per vector. Windows of pure digital silence are
/// never speech.
fn probabilities(audio: &AudioBuffer, vectors: &[XVector], model: &CalibratedLinearModel) -> Result<Vec<f64>> {
    vectors
        .iter()
        .map(|v| {
            if is_digital_silence(audio, v.window_start_s, v.window_end_s) {
                Ok(0.0)
            } else {
                Ok(classifier::predict(model, &v.as_f64())?.1)
            }
        })
        .collect()
}

pub fn run_pipeline(
    audio: &AudioBuffer,
    net: &XVectorNet,
    model: Option<&CalibratedLinearModel>,
    cfg: &PipelineConfig,
) -> Result<PipelineOutput> {
    cfg.validate()?;
    if cfg.strategy != Strategy::Baseline && model.is_none() {
        return Err(PipelineError::MissingModel(cfg.strategy));
    }
    let empty = PipelineOutput { segments: Vec::new(), xvectors: Vec::new(), decisions: Vec::new() };
    let duration = audio.duration_s();

    // Window slots as (run key, grid position, window).
    let mut slots: Vec<(usize, usize, (f64, f64))> = Vec::new();
    match cfg.strategy {
        Strategy::Baseline => {
            let vad = baseline::run_baseline(audio, &cfg.baseline)?;
            for (key, seg) in vad.iter().enumerate() {
                let grid = match window_grid(seg.duration_s(), &cfg.extraction) {
                    Ok(g) => g,
                    // Too short for the minimum window: one padded window.
                    Err(xvector::XVectorError::StreamTooShort { .. }) => vec![(0.0, seg.duration_s())],
                    Err(e) => return Err(e.into()),
                };
                for (pos, (a, b)) in grid.into_iter().enumerate() {
                    slots.push((key, pos, (seg.start_s + a, (seg.start_s + b).min(seg.end_s))));
                }
            }
        }
        Strategy::XvectorFilt | Strategy::XvectorSegFilt => {
            let grid = match window_grid(duration, &cfg.extraction) {
                Ok(g) => g,
                Err(xvector::XVectorError::StreamTooShort { .. }) => return Ok(empty),
                Err(e) => return Err(e.into()),
            };
            slots.extend(grid.into_iter().enumerate().map(|(pos, w)| (0, pos, w)));
        }
    }
    if slots.is_empty() {
        return Ok(empty);
    }
    let feats = compute_features(audio, &cfg.mfcc, cfg.cmvn_window)?;
    let windows: Vec<(f64, f64)> = slots.iter().map(|s| s.2).collect();
    let vectors = extract_windows(net, &feats, &windows)?;
    let probs: Option<Vec<f64>> = model.map(|m| probabilities(audio, &vectors, m)).transpose()?;
    let prob_of = |i: usize| probs.as_ref().map(|p| p[i]);

    // Vectors that take part in clustering.
    let members: Vec<usize> = match (cfg.strategy, &probs) {
        (Strategy::XvectorFilt, Some(p)) => filter_by_probability(p, cfg.vad_threshold).0,
        _ => (0..vectors.len()).collect(),
    };
    let mut clusters: Vec<Option<usize>> = vec![None; vectors.len()];
    let mut segments = Vec::new();
    if !members.is_empty() {
        let member_vectors: Vec<XVector> = members.iter().map(|&i| vectors[i].clone()).collect();
        let member_probs: Vec<Option<f64>> = members.iter().map(|&i| prob_of(i)).collect();
        let clustered = cluster_xvectors(&member_vectors, &member_probs, cfg.cluster_threshold, cfg.center_embeddings)?;
        let ids: Vec<usize> = clustered.entries.iter().map(|e| e.cluster).collect();
        for (&i, &c) in members.iter().zip(&ids) {
            clusters[i] = Some(c);
        }
        let member_slots: Vec<(usize, usize, usize)> =
            members.iter().enumerate().map(|(k, &i)| (slots[i].0, slots[i].1, k)).collect();
        let raw = runs_to_segments(&member_slots, &member_vectors, &ids);
        let raw = match cfg.strategy {
            Strategy::XvectorSegFilt => {
                filter_segments(&clustered, &raw, cfg.noise_proportion_threshold, cfg.vad_threshold)
            }
            _ => raw,
        };
        let gap = match cfg.strategy {
            Strategy::Baseline => cfg.baseline.merge_gap_s,
            _ => cfg.merge_gap_s,
        };
        segments = merge_per_label(raw, gap)?;
    }
    let decisions = vectors
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let probability = prob_of(i);
            DecisionEntry {
                start_s: v.window_start_s,
                end_s: v.window_end_s,
                probability,
                label: probability.map(|p| if p >= cfg.vad_threshold { Label::Speech } else { Label::Noise }),
                cluster: clusters[i],
            }
        })
        .collect();
    Ok(PipelineOutput { segments, xvectors: vectors, decisions })
}
