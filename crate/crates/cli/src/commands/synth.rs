use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use xvad::classifier::{platt_calibrate, predict, TrainConfig};
use xvad::frontend::write_wav;
use xvad::synth::{self, NetSpec};
use xvad::xvector::save_weights;
use xvad::{Label, PipelineConfig};

use super::{create_dir, write_text, CLASSIFIER_FILE, NET_FILE};
use crate::config::{required, Arch, AudioKind, LoadedConfig};
use crate::error::{CliError, Result};
use crate::report::emit;
use crate::{GenTestAudioArgs, GenTestModelArgs};

#[derive(Serialize)]
struct GenModelReport {
    arch: &'static str,
    seed: u64,
    net: PathBuf,
    classifier: Option<PathBuf>,
    training_examples: usize,
    training_accuracy: Option<f64>,
}

pub fn gen_test_model(a: GenTestModelArgs, cfg: LoadedConfig, report: Option<&Path>) -> Result<()> {
    let mut p = cfg.file.gen_test_model;
    p.out = a.out.or(p.out);
    if let Some(v) = a.seed {
        p.seed = v;
    }
    if let Some(v) = a.arch {
        p.arch = v;
    }
    if let Some(v) = a.per_class {
        p.per_class = v;
    }
    if a.no_classifier {
        p.classifier = false;
    }
    let out = required(p.out, "--out")?;
    let spec = match p.arch {
        Arch::Standard => NetSpec::standard(),
        Arch::Small => NetSpec::small(),
    };
    let net = synth::calibrated_random_net(&spec, p.seed);
    create_dir(&out)?;
    let net_path = out.join(NET_FILE);
    save_weights(&net, &net_path)?;
    let mut body = GenModelReport {
        arch: match p.arch {
            Arch::Standard => "standard",
            Arch::Small => "small",
        },
        seed: p.seed,
        net: net_path,
        classifier: None,
        training_examples: 0,
        training_accuracy: None,
    };
    if p.classifier {
        let data = synth::matched_training_embeddings(&net, &PipelineConfig::default(), p.per_class, p.seed);
        let model = platt_calibrate(&data, &TrainConfig { seed: p.seed, ..TrainConfig::default() })?;
        let path = out.join(CLASSIFIER_FILE);
        model.save(&path)?;
        let mut hits = 0usize;
        for e in &data {
            hits += usize::from(predict(&model, &e.values)?.0 == e.label);
        }
        body.training_examples = data.len();
        body.training_accuracy = Some(hits as f64 / data.len() as f64);
        body.classifier = Some(path);
    }
    emit("gen-test-model", &body, report)
}

#[derive(Serialize)]
struct GenAudioReport {
    out: PathBuf,
    reference: Option<PathBuf>,
    kind: &'static str,
    duration_s: f64,
    sample_rate: u32,
    seed: u64,
    speech_s: f64,
}

/// Mean block length of the mixed stream, used to turn a duration into a
/// block count.
const MIXED_BLOCK_S: f64 = 4.5;

pub fn gen_test_audio(a: GenTestAudioArgs, cfg: LoadedConfig, report: Option<&Path>) -> Result<()> {
    let mut p = cfg.file.gen_test_audio;
    p.out = a.out.or(p.out);
    p.reference = a.reference.or(p.reference);
    if let Some(v) = a.kind {
        p.kind = v;
    }
    if let Some(v) = a.duration {
        p.duration_s = v;
    }
    if let Some(v) = a.speech_duration {
        p.speech_s = v;
    }
    if let Some(v) = a.sample_rate {
        p.sample_rate = v;
    }
    if let Some(v) = a.seed {
        p.seed = v;
    }
    let out = required(p.out, "--out")?;
    if !(p.duration_s > 0.0) || p.sample_rate == 0 {
        return Err(CliError::usage("--duration and --sample-rate must be positive"));
    }
    let (d, sr, seed) = (p.duration_s, p.sample_rate, p.seed);
    let (audio, spans, kind): (_, Vec<(f64, f64, Label)>, _) = match p.kind {
        AudioKind::SpeechThenTone => {
            if !(p.speech_s > 0.0 && p.speech_s < d) {
                return Err(CliError::usage("--speech-duration must lie strictly inside --duration"));
            }
            let (audio, seg) = synth::speech_then_tone(p.speech_s, d, sr, seed);
            let spans = vec![(seg.start_s, seg.end_s, Label::Speech), (seg.end_s, d, Label::Noise)];
            (audio, spans, "speech_then_tone")
        }
        AudioKind::Speech => (synth::speech_proxy(d, sr, seed), vec![(0.0, d, Label::Speech)], "speech"),
        AudioKind::Tone => (synth::tone(d, sr, 440.0, 0.3, seed), vec![(0.0, d, Label::Noise)], "tone"),
        AudioKind::Noise => (synth::white_noise(d, sr, 0.1, seed), vec![(0.0, d, Label::Noise)], "noise"),
        AudioKind::Silence => (synth::silence(d, sr), vec![(0.0, d, Label::Noise)], "silence"),
        AudioKind::Mixed => {
            let blocks = ((d / MIXED_BLOCK_S).round() as usize).max(1);
            let (audio, spans) = synth::mixed_stream(blocks, sr, seed);
            (audio, spans, "mixed")
        }
    };
    write_wav(&out, &audio)?;
    if let Some(r) = &p.reference {
        let mut text = String::new();
        for &(s, e, label) in &spans {
            let cond = if label == Label::Speech { "clean_speech" } else { "no_speech" };
            let _ = writeln!(text, "{s:.3}\t{e:.3}\t{cond}");
        }
        write_text(r, &text)?;
    }
    let body = GenAudioReport {
        out,
        reference: p.reference,
        kind,
        duration_s: audio.duration_s(),
        sample_rate: sr,
        seed,
        speech_s: spans.iter().filter(|s| s.2 == Label::Speech).map(|s| s.1 - s.0).sum(),
    };
    emit("gen-test-audio", &body, report)
}
