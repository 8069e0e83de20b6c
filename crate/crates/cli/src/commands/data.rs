use std::path::{Path, PathBuf};

use serde::Serialize;
use xvad::analysis::{pca_reduce, projection_csv, subsample_indices, tsne_embed};
use xvad::dataprep::{
    build_dataset, embeddings_from_archive, manifest_to_text, parse_ctm, realign_by_file, ManifestEntry,
};
use xvad::segment::to_rttm;
use xvad::Label;

use super::{create_dir, load_manifest, write_text};
use crate::config::{required, LoadedConfig};
use crate::error::{io_err, Result};
use crate::report::emit;
use crate::{RealignArgs, ReduceArgs, SplitArgs};

#[derive(Serialize)]
struct RealignReport {
    out: PathBuf,
    files: usize,
    words: usize,
    segments: usize,
    speech_s: f64,
}

pub fn realign(a: RealignArgs, cfg: LoadedConfig, report: Option<&Path>) -> Result<()> {
    let mut p = cfg.file.realign;
    p.ctm = a.ctm.or(p.ctm);
    p.out = a.out.or(p.out);
    if let Some(v) = a.max_gap {
        p.max_gap_s = v;
    }
    if let Some(v) = a.min_dur {
        p.min_dur_s = v;
    }
    let ctm = required(p.ctm, "--ctm")?;
    let out = required(p.out, "--out")?;
    let words = parse_ctm(&std::fs::read_to_string(&ctm).map_err(io_err(&ctm))?)?;
    let by_file = realign_by_file(&words, p.max_gap_s, p.min_dur_s)?;
    let mut text = String::new();
    for (id, segs) in &by_file {
        text.push_str(&to_rttm(id, segs));
    }
    write_text(&out, &text)?;
    let body = RealignReport {
        out,
        files: by_file.len(),
        words: words.len(),
        segments: by_file.values().map(Vec::len).sum(),
        speech_s: by_file.values().flatten().map(|s| s.duration_s()).sum(),
    };
    emit("realign", &body, report)
}

#[derive(Serialize)]
struct SplitReport {
    train: PathBuf,
    eval: PathBuf,
    train_entries: usize,
    eval_entries: usize,
    fraction: f64,
    seed: u64,
}

pub fn split(a: SplitArgs, cfg: LoadedConfig, report: Option<&Path>) -> Result<()> {
    let mut p = cfg.file.split;
    p.manifest = a.manifest.or(p.manifest);
    p.out_dir = a.out_dir.or(p.out_dir);
    if let Some(v) = a.fraction {
        p.fraction = v;
    }
    if let Some(v) = a.seed {
        p.seed = v;
    }
    let out_dir = required(p.out_dir, "--out-dir")?;
    // Absolute paths keep the written manifests valid from any directory.
    let entries: Vec<ManifestEntry> = load_manifest(&required(p.manifest, "--manifest")?)?
        .into_iter()
        .map(|mut e| {
            e.path = std::path::absolute(&e.path).map_or(e.path, |p| p.to_string_lossy().into_owned());
            e
        })
        .collect();
    let (speech, noise): (Vec<_>, Vec<_>) = entries.into_iter().partition(|e| e.label == Label::Speech);
    let (train, eval) = build_dataset(&speech, &noise, p.fraction, p.seed)?;
    create_dir(&out_dir)?;
    let (train_path, eval_path) = (out_dir.join("train.tsv"), out_dir.join("eval.tsv"));
    write_text(&train_path, &manifest_to_text(&train))?;
    write_text(&eval_path, &manifest_to_text(&eval))?;
    let body = SplitReport {
        train: train_path,
        eval: eval_path,
        train_entries: train.len(),
        eval_entries: eval.len(),
        fraction: p.fraction,
        seed: p.seed,
    };
    emit("split", &body, report)
}

#[derive(Serialize)]
struct ReduceReport {
    out: PathBuf,
    points: usize,
    total_points: usize,
    pca_components: usize,
    explained_variance: f64,
    perplexity: f64,
    final_kl: f64,
    kl_checkpoints: Vec<(usize, f64)>,
}

pub fn reduce(a: ReduceArgs, cfg: LoadedConfig, report: Option<&Path>) -> Result<()> {
    let mut p = cfg.file.reduce;
    p.manifest = a.manifest.or(p.manifest);
    p.out = a.out.or(p.out);
    if let Some(v) = a.target_variance {
        p.target_variance = v;
    }
    if let Some(v) = a.max_points {
        p.max_points = v;
    }
    if let Some(v) = a.perplexity {
        p.tsne.perplexity = v;
    }
    if let Some(v) = a.iterations {
        p.tsne.iterations = v;
    }
    if let Some(v) = a.seed {
        p.tsne.seed = v;
    }
    let out = required(p.out, "--out")?;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut sources = Vec::new();
    for entry in load_manifest(&required(p.manifest, "--manifest")?)? {
        for e in embeddings_from_archive(&entry)? {
            rows.push(e.values);
            labels.push(e.label.to_string());
            sources.push(e.source_id);
        }
    }
    let total = rows.len();
    let keep = subsample_indices(total, p.max_points, p.tsne.seed);
    let pick = |v: &[String]| keep.iter().map(|&i| v[i].clone()).collect::<Vec<_>>();
    let (labels, sources) = (pick(&labels), pick(&sources));
    let rows: Vec<Vec<f64>> = keep.iter().map(|&i| std::mem::take(&mut rows[i])).collect();
    let pca = pca_reduce(&rows, p.target_variance)?;
    let tsne = tsne_embed(&pca.projected, &p.tsne)?;
    write_text(&out, &projection_csv(&tsne.coords, &labels, &sources))?;
    let body = ReduceReport {
        out,
        points: rows.len(),
        total_points: total,
        pca_components: pca.k(),
        explained_variance: pca.ratios[..pca.k()].iter().sum(),
        perplexity: p.tsne.perplexity,
        final_kl: tsne.final_kl,
        kl_checkpoints: tsne.kl_checkpoints,
    };
    emit("reduce", &body, report)
}
