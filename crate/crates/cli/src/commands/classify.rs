use std::path::{Path, PathBuf};

use serde::Serialize;
use xvad::classifier::{
    fit_sigmoid, l1_normalize, platt_calibrate, predict, select_threshold, Label, LabeledEmbedding,
};
use xvad::CalibratedLinearModel;

use super::{load_classifier, load_embeddings};
use crate::config::{required, LoadedConfig};
use crate::error::Result;
use crate::report::emit;
use crate::{CalibrateArgs, ThresholdArgs, TrainArgs};

#[derive(Serialize)]
struct TrainReport {
    out: PathBuf,
    num_speech: usize,
    num_noise: usize,
    dim: usize,
    training_accuracy: f64,
    calib_a: f64,
    calib_b: f64,
    decision_threshold: f64,
}

fn accuracy(model: &CalibratedLinearModel, data: &[LabeledEmbedding]) -> Result<f64> {
    let mut hits = 0usize;
    for e in data {
        hits += usize::from(predict(model, &e.values)?.0 == e.label);
    }
    Ok(hits as f64 / data.len().max(1) as f64)
}

pub fn train(a: TrainArgs, cfg: LoadedConfig, report: Option<&Path>) -> Result<()> {
    let mut p = cfg.file.train;
    p.manifest = a.manifest.or(p.manifest);
    p.out = a.out.or(p.out);
    let t = &mut p.classifier;
    if let Some(v) = a.c {
        t.c = v;
    }
    if let Some(v) = a.folds {
        t.folds = v;
    }
    if let Some(v) = a.seed {
        t.seed = v;
    }
    if let Some(v) = a.max_iter {
        t.max_iter = v;
    }
    if let Some(v) = a.tolerance {
        t.tolerance = v;
    }
    if let Some(v) = a.loss {
        t.loss = v;
    }
    t.balance_classes |= a.balance_classes;
    let manifest = required(p.manifest, "--manifest")?;
    let out = required(p.out, "--out")?;
    let data = load_embeddings(&manifest)?;
    let model = platt_calibrate(&data, &p.classifier)?;
    model.save(&out)?;
    let body = TrainReport {
        num_speech: model.metadata.num_speech,
        num_noise: model.metadata.num_noise,
        dim: model.dim(),
        training_accuracy: accuracy(&model, &data)?,
        calib_a: model.calib_a,
        calib_b: model.calib_b,
        decision_threshold: model.decision_threshold,
        out,
    };
    emit("train", &body, report)
}

#[derive(Serialize)]
struct CalibrateReport {
    out: PathBuf,
    examples: usize,
    calib_a: f64,
    calib_b: f64,
    newton_iterations: usize,
}

pub fn calibrate(a: CalibrateArgs, cfg: LoadedConfig, report: Option<&Path>) -> Result<()> {
    let mut p = cfg.file.calibrate;
    p.model = a.model.or(p.model);
    p.manifest = a.manifest.or(p.manifest);
    p.out = a.out.or(p.out);
    let mut model = load_classifier(&required(p.model, "--model")?)?;
    let data = load_embeddings(&required(p.manifest, "--manifest")?)?;
    let out = required(p.out, "--out")?;
    let mut scores = Vec::with_capacity(data.len());
    for e in &data {
        if e.values.len() != model.dim() {
            return Err(xvad::classifier::ClassifierError::DimMismatch {
                expected: model.dim(),
                found: e.values.len(),
            }
            .into());
        }
        scores.push(model.score(&l1_normalize(&e.values)?));
    }
    let labels: Vec<Label> = data.iter().map(|e| e.label).collect();
    let fit = fit_sigmoid(&scores, &labels)?;
    model.calib_a = fit.a;
    model.calib_b = fit.b;
    model.save(&out)?;
    let body = CalibrateReport {
        out,
        examples: data.len(),
        calib_a: fit.a,
        calib_b: fit.b,
        newton_iterations: fit.iterations,
    };
    emit("calibrate", &body, report)
}

#[derive(Serialize)]
struct ThresholdReport {
    target_fpr: f64,
    threshold: f64,
    fpr: f64,
    tpr: Option<f64>,
    tpr_at_target: Option<f64>,
    out: Option<PathBuf>,
}

pub fn threshold(a: ThresholdArgs, cfg: LoadedConfig, report: Option<&Path>) -> Result<()> {
    let mut p = cfg.file.threshold;
    p.model = a.model.or(p.model);
    p.manifest = a.manifest.or(p.manifest);
    p.out = a.out.or(p.out);
    if let Some(v) = a.target_fpr {
        p.target_fpr = v;
    }
    let mut model = load_classifier(&required(p.model, "--model")?)?;
    let data = load_embeddings(&required(p.manifest, "--manifest")?)?;
    let mut probs = Vec::with_capacity(data.len());
    for e in &data {
        probs.push((predict(&model, &e.values)?.1, e.label));
    }
    let sel = select_threshold(&probs, p.target_fpr)?;
    if let Some(out) = &p.out {
        // A threshold just above 1 rejects everything; 1.0 is the closest
        // value a model file can hold.
        model.decision_threshold = sel.threshold.min(1.0);
        model.save(out)?;
    }
    let body = ThresholdReport {
        target_fpr: p.target_fpr,
        threshold: sel.threshold,
        fpr: sel.fpr,
        tpr: sel.tpr,
        tpr_at_target: sel.tpr_at_target,
        out: p.out,
    };
    emit("threshold", &body, report)
}
