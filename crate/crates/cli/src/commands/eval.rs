use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use xvad::metrics::{
    frame_vad_eval, parse_condition_tsv, parse_transcripts, rasterize, rasterize_conditions, roc_curve,
    score_transcripts, tpr_at_fpr, wer_from_counts, ConditionLabel, MetricsError, WerReport,
};
use xvad::segment::from_tsv;

use crate::config::{required, LoadedConfig};
use crate::error::{io_err, CliError, Result};
use crate::report::emit;
use crate::{EvalVadArgs, EvalWerArgs};

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

#[derive(Serialize)]
struct ConditionRates {
    clean_speech: Option<f64>,
    speech_with_noise: Option<f64>,
    speech_with_music: Option<f64>,
    all: Option<f64>,
}

#[derive(Serialize)]
struct RocSummary {
    target_fpr: f64,
    scored_xvectors: usize,
    tpr_at_target: ConditionRates,
}

#[derive(Serialize)]
struct EvalVadReport {
    frame_period_s: f64,
    duration_s: f64,
    frames: usize,
    tpr: ConditionRates,
    fpr: Option<f64>,
    roc: Option<RocSummary>,
}

/// `(centre_s, probability)` for every scored line of a decision log.
fn parse_decision_log(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.is_empty() {
            continue;
        }
        let bad = || CliError::from(MetricsError::Parse { line: i + 1, msg: format!("bad decision line '{line}'") });
        if f.len() != 5 {
            return Err(bad());
        }
        let start: f64 = f[0].parse().map_err(|_| bad())?;
        let end: f64 = f[1].parse().map_err(|_| bad())?;
        if f[2] == "NA" {
            continue;
        }
        let p: f64 = f[2].parse().map_err(|_| bad())?;
        out.push((0.5 * (start + end), p));
    }
    Ok(out)
}

fn roc_summary(scored: &[(f64, f64)], conditions: &[ConditionLabel], period: f64, target: f64) -> Result<RocSummary> {
    let condition_at = |t: f64| {
        let i = ((t / period).floor().max(0.0) as usize).min(conditions.len().saturating_sub(1));
        conditions.get(i).copied().unwrap_or(ConditionLabel::NoSpeech)
    };
    let labelled: Vec<(f64, ConditionLabel)> = scored.iter().map(|&(c, p)| (p, condition_at(c))).collect();
    let rate = |keep: &dyn Fn(ConditionLabel) -> bool| -> Option<f64> {
        let items: Vec<(f64, bool)> = labelled
            .iter()
            .filter(|(_, c)| *c == ConditionLabel::NoSpeech || keep(*c))
            .map(|&(p, c)| (p, c.is_speech()))
            .collect();
        roc_curve(&items).ok().map(|curve| tpr_at_fpr(&curve, target))
    };
    Ok(RocSummary {
        target_fpr: target,
        scored_xvectors: scored.len(),
        tpr_at_target: ConditionRates {
            clean_speech: rate(&|c| c == ConditionLabel::CleanSpeech),
            speech_with_noise: rate(&|c| c == ConditionLabel::SpeechWithNoise),
            speech_with_music: rate(&|c| c == ConditionLabel::SpeechWithMusic),
            all: rate(&|c| c.is_speech()),
        },
    })
}

pub fn eval_vad(a: EvalVadArgs, cfg: LoadedConfig, report: Option<&Path>) -> Result<()> {
    let mut p = cfg.file.eval_vad;
    p.hyp = a.hyp.or(p.hyp);
    p.reference = a.reference.or(p.reference);
    p.decisions = a.decisions.or(p.decisions);
    p.duration_s = a.duration.or(p.duration_s);
    if let Some(v) = a.frame_period {
        p.frame_period_s = v;
    }
    if let Some(v) = a.target_fpr {
        p.target_fpr = v;
    }
    let hyp = from_tsv(&read(&required(p.hyp, "--hyp")?)?)?;
    let reference = parse_condition_tsv(&read(&required(p.reference, "--ref")?)?)?;
    let duration = p
        .duration_s
        .unwrap_or_else(|| hyp.iter().map(|s| s.end_s).chain(reference.iter().map(|c| c.end_s)).fold(0.0, f64::max));
    let period = p.frame_period_s;
    let track = rasterize(&hyp, period, duration)?;
    let conditions = rasterize_conditions(&reference, period, duration)?;
    let r = frame_vad_eval(&track, &conditions)?;
    let roc = match &p.decisions {
        Some(path) => Some(roc_summary(&parse_decision_log(&read(path)?)?, &conditions, period, p.target_fpr)?),
        None => None,
    };
    let body = EvalVadReport {
        frame_period_s: period,
        duration_s: duration,
        frames: track.len(),
        tpr: ConditionRates {
            clean_speech: r.clean,
            speech_with_noise: r.noise,
            speech_with_music: r.music,
            all: r.all,
        },
        fpr: r.fpr,
        roc,
    };
    emit("eval-vad", &body, report)
}

#[derive(Serialize)]
struct WerCounts {
    tot: usize,
    err: usize,
    ins: usize,
    del: usize,
    sub: usize,
    /// Rounded to one decimal; absent when the reference is empty.
    wer: Option<f64>,
}

impl From<&WerReport> for WerCounts {
    fn from(r: &WerReport) -> Self {
        Self {
            tot: r.tot,
            err: r.err,
            ins: r.ins,
            del: r.del,
            sub: r.sub,
            wer: wer_from_counts(r.tot, r.ins, r.del, r.sub).ok(),
        }
    }
}

#[derive(Serialize)]
struct EvalWerReport {
    reference: PathBuf,
    hyp: PathBuf,
    normalized: bool,
    total: WerCounts,
    per_file: BTreeMap<String, WerCounts>,
}

pub fn eval_wer(a: EvalWerArgs, cfg: LoadedConfig, report: Option<&Path>) -> Result<()> {
    let mut p = cfg.file.eval_wer;
    p.reference = a.reference.or(p.reference);
    p.hyp = a.hyp.or(p.hyp);
    if a.no_normalize {
        p.normalize = false;
    }
    let ref_path = required(p.reference, "--ref")?;
    let hyp_path = required(p.hyp, "--hyp")?;
    let r = parse_transcripts(&read(&ref_path)?, p.normalize)?;
    let h = parse_transcripts(&read(&hyp_path)?, p.normalize)?;
    let score = score_transcripts(&r, &h)?;
    let body = EvalWerReport {
        reference: ref_path,
        hyp: hyp_path,
        normalized: p.normalize,
        total: WerCounts::from(&score.total),
        per_file: score.per_file.iter().map(|(k, v)| (k.clone(), WerCounts::from(v))).collect(),
    };
    emit("eval-wer", &body, report)
}
