pub mod classify;
pub mod data;
pub mod eval;
pub mod features;
pub mod segment;
pub mod synth;

use std::path::{Path, PathBuf};

use xvad::classifier::LabeledEmbedding;
use xvad::dataprep::{self, ManifestEntry};
use xvad::frontend::{read_wav, AudioBuffer};
use xvad::xvector::load_weights;
use xvad::{CalibratedLinearModel, XVectorNet};

use crate::error::{io_err, CliError, Result};

pub const NET_FILE: &str = "net.xvnw";
pub const CLASSIFIER_FILE: &str = "classifier.json";

/// Network weights from `--net`, else `<model>/net.xvnw`.
pub fn resolve_net(model: Option<&Path>, net: Option<PathBuf>) -> Result<XVectorNet> {
    let path = match (net, model) {
        (Some(p), _) => p,
        (None, Some(dir)) => dir.join(NET_FILE),
        (None, None) => return Err(CliError::usage("missing required --net or --model")),
    };
    Ok(load_weights(&path)?)
}

/// Classifier from `--classifier`, else `<model>/classifier.json` if present.
pub fn resolve_classifier(model: Option<&Path>, classifier: Option<PathBuf>) -> Result<Option<CalibratedLinearModel>> {
    let path = match (classifier, model) {
        (Some(p), _) => p,
        (None, Some(dir)) if dir.join(CLASSIFIER_FILE).is_file() => dir.join(CLASSIFIER_FILE),
        _ => return Ok(None),
    };
    Ok(Some(CalibratedLinearModel::load(&path)?))
}

/// A classifier given either as a model directory or as the JSON file.
pub fn load_classifier(path: &Path) -> Result<CalibratedLinearModel> {
    let file = if path.is_dir() { path.join(CLASSIFIER_FILE) } else { path.to_path_buf() };
    Ok(CalibratedLinearModel::load(file)?)
}

pub fn read_audio(path: &Path) -> Result<AudioBuffer> {
    Ok(read_wav(path, true)?)
}

/// File name without directory and extension, used as the output id.
pub fn file_id(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_owned)
        .ok_or_else(|| CliError::usage(format!("cannot derive a file id from {}", path.display())))
}

/// Manifest entries with relative paths resolved against the manifest's
/// directory.
pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut entries = dataprep::parse_manifest(&text)?;
    for e in &mut entries {
        if Path::new(&e.path).is_relative() {
            e.path = base.join(&e.path).to_string_lossy().into_owned();
        }
    }
    Ok(entries)
}

pub fn load_embeddings(manifest: &Path) -> Result<Vec<LabeledEmbedding>> {
    let mut out = Vec::new();
    for e in load_manifest(manifest)? {
        out.extend(dataprep::embeddings_from_archive(&e)?);
    }
    Ok(out)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(io_err(path))
}

/// Ids must be unique so that parallel outputs never share a path.
pub fn unique_ids(paths: &[PathBuf]) -> Result<Vec<String>> {
    let ids = paths.iter().map(|p| file_id(p)).collect::<Result<Vec<_>>>()?;
    let mut seen = std::collections::BTreeSet::new();
    for id in &ids {
        if !seen.insert(id.as_str()) {
            return Err(CliError::usage(format!("duplicate file id '{id}' in manifest")));
        }
    }
    Ok(ids)
}
