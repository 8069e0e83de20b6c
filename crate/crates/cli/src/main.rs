#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use xvad::classifier::Loss;
use xvad::Strategy;

mod commands;
mod config;
mod error;
mod report;

use config::{Arch, AudioKind, LoadedConfig};
use error::{CliError, Result};

/// Toolkit version followed by the on-disk format version shared by the
/// weights, archive, feature and model files.
const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (formats: weights/archive/features/model v1)");

#[derive(Debug, Parser)]
#[command(name = "xvad", version = VERSION, about = "X-vector voice activity detection and speech segmentation")]
struct Cli {
    /// TOML file with one table per subcommand; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for parallel steps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Also write the JSON report to this file.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute MFCC features for a WAV file.
    Mfcc(MfccArgs),
    /// Extract x-vectors on the sliding-window grid.
    Extract(ExtractArgs),
    /// Train and calibrate the speech/noise classifier.
    Train(TrainArgs),
    /// Refit the probability calibration on held-out x-vectors.
    Calibrate(CalibrateArgs),
    /// Pick the decision threshold for a target false positive rate.
    Threshold(ThresholdArgs),
    /// Run VAD and segmentation.
    Segment(SegmentArgs),
    /// Frame-level VAD scoring against a condition reference.
    EvalVad(EvalVadArgs),
    /// Word error rate between two transcript files.
    EvalWer(EvalWerArgs),
    /// Derive speech segments from word alignments.
    Realign(RealignArgs),
    /// Source-grouped train/eval split of a manifest.
    Split(SplitArgs),
    /// PCA followed by t-SNE to a 2-D projection.
    Reduce(ReduceArgs),
    /// Write a seeded random x-vector network and a classifier fitted to it.
    GenTestModel(GenTestModelArgs),
    /// Write a synthetic WAV fixture and its condition reference.
    GenTestAudio(GenTestAudioArgs),
}

#[derive(Debug, Args)]
pub struct MfccArgs {
    #[arg(long)]
    audio: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Apply sliding-window CMVN.
    #[arg(long)]
    cmvn: bool,
    #[arg(long)]
    cmvn_window: Option<usize>,
    #[arg(long)]
    num_ceps: Option<usize>,
    #[arg(long)]
    num_mel_bins: Option<usize>,
    #[arg(long)]
    dither: Option<f64>,
    /// Dither seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Model directory holding `net.xvnw`.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Network weights file; overrides the model directory.
    #[arg(long)]
    net: Option<PathBuf>,
    #[arg(long)]
    audio: Option<PathBuf>,
    /// Tab-separated `path label source-id` list of WAV files.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Archive path for `--audio`, output directory for `--manifest`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    window: Option<f64>,
    #[arg(long)]
    stride: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Manifest of x-vector archives.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "c")]
    c: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long, value_parser = parse_loss)]
    loss: Option<Loss>,
    #[arg(long)]
    balance_classes: bool,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Write the model with the selected threshold here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    target_fpr: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long, value_parser = parse_strategy)]
    strategy: Option<Strategy>,
    /// Model directory with `net.xvnw` and `classifier.json`.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    net: Option<PathBuf>,
    #[arg(long)]
    classifier: Option<PathBuf>,
    #[arg(long)]
    audio: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    vad_threshold: Option<f64>,
    /// Maximum share of noise x-vectors in a kept segment.
    #[arg(long)]
    noise_threshold: Option<f64>,
    #[arg(long)]
    cluster_threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvalVadArgs {
    /// Hypothesis segments (`start end label`).
    #[arg(long)]
    hyp: Option<PathBuf>,
    /// Reference condition intervals (`start end condition`).
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    /// Decision log from `segment`, for ROC scoring of x-vector probabilities.
    #[arg(long)]
    decisions: Option<PathBuf>,
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    frame_period: Option<f64>,
    #[arg(long)]
    target_fpr: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvalWerArgs {
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    #[arg(long)]
    hyp: Option<PathBuf>,
    /// Compare tokens verbatim.
    #[arg(long)]
    no_normalize: bool,
}

#[derive(Debug, Args)]
pub struct RealignArgs {
    #[arg(long)]
    ctm: Option<PathBuf>,
    /// RTTM output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    max_gap: Option<f64>,
    #[arg(long)]
    min_dur: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    fraction: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    /// Manifest of x-vector archives.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// CSV output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    target_variance: Option<f64>,
    #[arg(long)]
    max_points: Option<usize>,
    #[arg(long)]
    perplexity: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GenTestModelArgs {
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    arch: Option<Arch>,
    /// Synthetic training x-vectors per class.
    #[arg(long)]
    per_class: Option<usize>,
    /// Only write the network.
    #[arg(long)]
    no_classifier: bool,
}

#[derive(Debug, Args)]
pub struct GenTestAudioArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    /// Condition reference output.
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    #[arg(long, value_enum)]
    kind: Option<AudioKind>,
    #[arg(long)]
    duration: Option<f64>,
    /// Speech part of `speech_then_tone`.
    #[arg(long)]
    speech_duration: Option<f64>,
    #[arg(long)]
    sample_rate: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_strategy(s: &str) -> std::result::Result<Strategy, String> {
    s.parse().map_err(|_| {
        let all: Vec<&str> = Strategy::ALL.iter().map(|s| s.as_str()).collect();
        format!("expected one of {}", all.join(", "))
    })
}

fn parse_loss(s: &str) -> std::result::Result<Loss, String> {
    match s {
        "hinge" => Ok(Loss::Hinge),
        "squared_hinge" => Ok(Loss::SquaredHinge),
        _ => Err("expected hinge or squared_hinge".into()),
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = LoadedConfig::load(cli.config.as_deref())?;
    let report = cli.report.as_deref();
    let dispatch = move || -> Result<()> {
        match cli.command {
            Command::Mfcc(a) => commands::features::mfcc(a, cfg, report),
            Command::Extract(a) => commands::features::extract(a, cfg, report),
            Command::Train(a) => commands::classify::train(a, cfg, report),
            Command::Calibrate(a) => commands::classify::calibrate(a, cfg, report),
            Command::Threshold(a) => commands::classify::threshold(a, cfg, report),
            Command::Segment(a) => commands::segment::segment(a, &cfg, report),
            Command::EvalVad(a) => commands::eval::eval_vad(a, cfg, report),
            Command::EvalWer(a) => commands::eval::eval_wer(a, cfg, report),
            Command::Realign(a) => commands::data::realign(a, cfg, report),
            Command::Split(a) => commands::data::split(a, cfg, report),
            Command::Reduce(a) => commands::data::reduce(a, cfg, report),
            Command::GenTestModel(a) => commands::synth::gen_test_model(a, cfg, report),
            Command::GenTestAudio(a) => commands::synth::gen_test_audio(a, cfg, report),
        }
    };
    match cli.jobs {
        None => dispatch(),
        Some(0) => Err(CliError::usage("--jobs must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::usage(format!("--jobs {n}: {e}")))?
            .install(dispatch),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
