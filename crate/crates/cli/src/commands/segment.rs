use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use xvad::pipeline::run_pipeline;
use xvad::segment::{to_rttm, to_tsv};
use xvad::xvector::write_archive;
use xvad::Strategy;

use super::{create_dir, load_manifest, read_audio, resolve_classifier, resolve_net, unique_ids, write_text};
use crate::config::{required, LoadedConfig};
use crate::error::{CliError, Result};
use crate::report::emit;
use crate::SegmentArgs;

#[derive(Serialize)]
struct SegmentedFile {
    id: String,
    audio: PathBuf,
    duration_s: f64,
    segments: usize,
    speech_s: f64,
    xvectors: usize,
    outputs: Vec<PathBuf>,
}

#[derive(Serialize)]
struct SegmentReport {
    strategy: Strategy,
    vad_threshold: f64,
    noise_proportion_threshold: f64,
    cluster_threshold: f64,
    files: Vec<SegmentedFile>,
}

pub fn segment(a: SegmentArgs, cfg: &LoadedConfig, report: Option<&Path>) -> Result<()> {
    let s = &cfg.file.segment;
    let mut pipeline = s.pipeline.clone();
    if let Some(v) = a.strategy {
        pipeline.strategy = v;
    }
    if let Some(v) = a.noise_threshold {
        pipeline.noise_proportion_threshold = v;
    }
    if let Some(v) = a.cluster_threshold {
        pipeline.cluster_threshold = v;
    }
    let model_dir = a.model.or(s.model.clone());
    let net = resolve_net(model_dir.as_deref(), a.net.or(s.net.clone()))?;
    let classifier = resolve_classifier(model_dir.as_deref(), a.classifier.or(s.classifier.clone()))?;
    // The model's own threshold applies unless one was given explicitly.
    match (a.vad_threshold, &classifier) {
        (Some(v), _) => pipeline.vad_threshold = v,
        (None, Some(m)) if !cfg.has_key(&["segment", "pipeline", "vad_threshold"]) => {
            pipeline.vad_threshold = m.decision_threshold
        }
        _ => {}
    }
    pipeline.validate()?;
    let out = required(a.out.or(s.out.clone()), "--out")?;
    let audio_paths: Vec<PathBuf> = match (a.audio.or(s.audio.clone()), a.manifest.or(s.manifest.clone())) {
        (Some(p), None) => vec![p],
        (None, Some(m)) => load_manifest(&m)?.into_iter().map(|e| PathBuf::from(e.path)).collect(),
        _ => return Err(CliError::usage("give exactly one of --audio or --manifest")),
    };
    let ids = unique_ids(&audio_paths)?;
    create_dir(&out)?;

    let files = audio_paths
        .par_iter()
        .zip(&ids)
        .map(|(path, id)| -> Result<SegmentedFile> {
            let audio = read_audio(path)?;
            let result = run_pipeline(&audio, &net, classifier.as_ref(), &pipeline)?;
            let seg_path = out.join(format!("{id}.seg.tsv"));
            let rttm_path = out.join(format!("{id}.rttm"));
            let xvec_path = out.join(format!("{id}.xvec"));
            let log_path = out.join(format!("{id}.decisions.log"));
            write_text(&seg_path, &to_tsv(&result.segments))?;
            write_text(&rttm_path, &to_rttm(id, &result.segments))?;
            write_archive(&xvec_path, &result.xvectors)?;
            write_text(&log_path, &result.decision_log())?;
            let speech_s = xvad::segment::union_intervals(&result.segments).iter().map(|(a, b)| b - a).sum();
            Ok(SegmentedFile {
                id: id.clone(),
                audio: path.clone(),
                duration_s: audio.duration_s(),
                segments: result.segments.len(),
                speech_s,
                xvectors: result.xvectors.len(),
                outputs: vec![seg_path, rttm_path, xvec_path, log_path],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let body = SegmentReport {
        strategy: pipeline.strategy,
        vad_threshold: pipeline.vad_threshold,
        noise_proportion_threshold: pipeline.noise_proportion_threshold,
        cluster_threshold: pipeline.cluster_threshold,
        files,
    };
    emit("segment", &body, report)
}
