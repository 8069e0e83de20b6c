use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use xvad::dataprep::{manifest_to_text, ManifestEntry};
use xvad::frontend::{apply_cmvn, compute_mfcc};
use xvad::pipeline::compute_features;
use xvad::xvector::{extract_sequence, write_archive};

use super::{create_dir, load_manifest, read_audio, resolve_net, unique_ids, write_text};
use crate::config::{required, LoadedConfig};
use crate::error::{CliError, Result};
use crate::report::emit;
use crate::{ExtractArgs, MfccArgs};

#[derive(Serialize)]
struct MfccReport {
    audio: PathBuf,
    out: PathBuf,
    frames: usize,
    dim: usize,
    frame_shift_s: f64,
    cmvn: bool,
}

pub fn mfcc(a: MfccArgs, cfg: LoadedConfig, report: Option<&Path>) -> Result<()> {
    let mut p = cfg.file.mfcc;
    p.audio = a.audio.or(p.audio);
    p.out = a.out.or(p.out);
    p.cmvn |= a.cmvn;
    if let Some(v) = a.cmvn_window {
        p.cmvn_window = v;
    }
    if let Some(v) = a.num_ceps {
        p.mfcc.num_ceps = v;
    }
    if let Some(v) = a.num_mel_bins {
        p.mfcc.num_mel_bins = v;
    }
    if let Some(v) = a.dither {
        p.mfcc.dither = v;
    }
    if let Some(v) = a.seed {
        p.mfcc.dither_seed = v;
    }
    let audio_path = required(p.audio, "--audio")?;
    let out = required(p.out, "--out")?;
    let audio = read_audio(&audio_path)?;
    let mut feats = compute_mfcc(&audio, &p.mfcc)?;
    if p.cmvn {
        feats = apply_cmvn(&feats, p.cmvn_window)?;
    }
    feats.save(&out)?;
    let body = MfccReport {
        audio: audio_path,
        out,
        frames: feats.num_frames(),
        dim: feats.dim(),
        frame_shift_s: feats.frame_shift_s,
        cmvn: p.cmvn,
    };
    emit("mfcc", &body, report)
}

#[derive(Serialize)]
struct ExtractedFile {
    id: String,
    audio: PathBuf,
    archive: PathBuf,
    vectors: usize,
}

#[derive(Serialize)]
struct ExtractReport {
    files: Vec<ExtractedFile>,
    manifest: Option<PathBuf>,
}

pub fn extract(a: ExtractArgs, cfg: LoadedConfig, report: Option<&Path>) -> Result<()> {
    let mut p = cfg.file.extract;
    p.model = a.model.or(p.model);
    p.net = a.net.or(p.net);
    p.audio = a.audio.or(p.audio);
    p.manifest = a.manifest.or(p.manifest);
    p.out = a.out.or(p.out);
    if let Some(v) = a.window {
        p.extraction.window_s = v;
    }
    if let Some(v) = a.stride {
        p.extraction.stride_s = v;
    }
    p.extraction.validate()?;
    let net = resolve_net(p.model.as_deref(), p.net)?;
    let out = required(p.out, "--out")?;

    let one = |audio_path: &Path, archive: &Path| -> Result<usize> {
        let audio = read_audio(audio_path)?;
        let feats = compute_features(&audio, &p.mfcc, p.cmvn_window)?;
        let vectors = extract_sequence(&net, &feats, &p.extraction)?;
        write_archive(archive, &vectors)?;
        Ok(vectors.len())
    };

    let body = match (p.audio, p.manifest) {
        (Some(audio), None) => {
            let n = one(&audio, &out)?;
            let id = super::file_id(&audio)?;
            ExtractReport { files: vec![ExtractedFile { id, audio, archive: out, vectors: n }], manifest: None }
        }
        (None, Some(manifest)) => {
            let entries = load_manifest(&manifest)?;
            let paths: Vec<PathBuf> = entries.iter().map(|e| PathBuf::from(&e.path)).collect();
            let ids = unique_ids(&paths)?;
            create_dir(&out)?;
            let counts: Vec<usize> = paths
                .par_iter()
                .zip(&ids)
                .map(|(path, id)| one(path, &out.join(format!("{id}.xvec"))))
                .collect::<Result<_>>()?;
            let listing: Vec<ManifestEntry> = entries
                .iter()
                .zip(&ids)
                .map(|(e, id)| ManifestEntry {
                    path: format!("{id}.xvec"),
                    label: e.label,
                    source_id: e.source_id.clone(),
                })
                .collect();
            let out_manifest = out.join("manifest.tsv");
            write_text(&out_manifest, &manifest_to_text(&listing))?;
            let files = paths
                .into_iter()
                .zip(ids)
                .zip(counts)
                .map(|((audio, id), vectors)| ExtractedFile {
                    archive: out.join(format!("{id}.xvec")),
                    id,
                    audio,
                    vectors,
                })
                .collect();
            ExtractReport { files, manifest: Some(out_manifest) }
        }
        _ => return Err(CliError::usage("give exactly one of --audio or --manifest")),
    };
    emit("extract", &body, report)
}
