//! TOML run configuration. One table per subcommand; every table and key is
//! checked, so a typo is a usage error rather than a silently ignored value.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use xvad::analysis::TsneConfig;
use xvad::classifier::TrainConfig;
use xvad::frontend::DEFAULT_CMVN_WINDOW;
use xvad::metrics::{DEFAULT_SCORING_PERIOD_S, DEFAULT_TARGET_FPR};
use xvad::{ExtractionConfig, MfccConfig, PipelineConfig};

use crate::error::{io_err, CliError, Result};

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    pub mfcc: MfccSection,
    pub extract: ExtractSection,
    pub train: TrainSection,
    pub calibrate: CalibrateSection,
    pub threshold: ThresholdSection,
    pub segment: SegmentSection,
    pub eval_vad: EvalVadSection,
    pub eval_wer: EvalWerSection,
    pub realign: RealignSection,
    pub split: SplitSection,
    pub reduce: ReduceSection,
    pub gen_test_model: GenModelSection,
    pub gen_test_audio: GenAudioSection,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MfccSection {
    pub audio: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub cmvn: bool,
    pub cmvn_window: usize,
    pub mfcc: MfccConfig,
}

impl Default for MfccSection {
    fn default() -> Self {
        Self { audio: None, out: None, cmvn: false, cmvn_window: DEFAULT_CMVN_WINDOW, mfcc: MfccConfig::default() }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractSection {
    pub model: Option<PathBuf>,
    pub net: Option<PathBuf>,
    pub audio: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub cmvn_window: usize,
    pub mfcc: MfccConfig,
    pub extraction: ExtractionConfig,
}

impl Default for ExtractSection {
    fn default() -> Self {
        Self {
            model: None,
            net: None,
            audio: None,
            manifest: None,
            out: None,
            cmvn_window: DEFAULT_CMVN_WINDOW,
            mfcc: MfccConfig::default(),
            extraction: ExtractionConfig::default(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub classifier: TrainConfig,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrateSection {
    pub model: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdSection {
    pub model: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub target_fpr: f64,
}

impl Default for ThresholdSection {
    fn default() -> Self {
        Self { model: None, manifest: None, out: None, target_fpr: DEFAULT_TARGET_FPR }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentSection {
    pub model: Option<PathBuf>,
    pub net: Option<PathBuf>,
    pub classifier: Option<PathBuf>,
    pub audio: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub pipeline: PipelineConfig,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalVadSection {
    pub hyp: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub decisions: Option<PathBuf>,
    pub duration_s: Option<f64>,
    pub frame_period_s: f64,
    pub target_fpr: f64,
}

impl Default for EvalVadSection {
    fn default() -> Self {
        Self {
            hyp: None,
            reference: None,
            decisions: None,
            duration_s: None,
            frame_period_s: DEFAULT_SCORING_PERIOD_S,
            target_fpr: DEFAULT_TARGET_FPR,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalWerSection {
    pub reference: Option<PathBuf>,
    pub hyp: Option<PathBuf>,
    pub normalize: bool,
}

impl Default for EvalWerSection {
    fn default() -> Self {
        Self { reference: None, hyp: None, normalize: true }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RealignSection {
    pub ctm: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub max_gap_s: f64,
    pub min_dur_s: f64,
}

impl Default for RealignSection {
    fn default() -> Self {
        Self {
            ctm: None,
            out: None,
            max_gap_s: xvad::dataprep::DEFAULT_MAX_GAP_S,
            min_dur_s: xvad::dataprep::DEFAULT_MIN_DUR_S,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub manifest: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub fraction: f64,
    pub seed: u64,
}

impl Default for SplitSection {
    fn default() -> Self {
        Self { manifest: None, out_dir: None, fraction: 0.9, seed: 0 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReduceSection {
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub target_variance: f64,
    pub max_points: usize,
    pub tsne: TsneConfig,
}

impl Default for ReduceSection {
    fn default() -> Self {
        Self { manifest: None, out: None, target_variance: 0.95, max_points: 2000, tsne: TsneConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    Standard,
    Small,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenModelSection {
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub arch: Arch,
    pub per_class: usize,
    pub classifier: bool,
}

impl Default for GenModelSection {
    fn default() -> Self {
        Self { out: None, seed: 0, arch: Arch::Standard, per_class: 500, classifier: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum AudioKind {
    SpeechThenTone,
    Speech,
    Tone,
    Noise,
    Silence,
    Mixed,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenAudioSection {
    pub out: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub kind: AudioKind,
    pub duration_s: f64,
    pub speech_s: f64,
    pub sample_rate: u32,
    pub seed: u64,
}

impl Default for GenAudioSection {
    fn default() -> Self {
        Self {
            out: None,
            reference: None,
            kind: AudioKind::SpeechThenTone,
            duration_s: 10.0,
            speech_s: 4.0,
            sample_rate: 16000,
            seed: 0,
        }
    }
}

/// Loaded file plus the raw tree, used to tell explicit keys from defaults.
#[derive(Debug, Default)]
pub struct LoadedConfig {
    pub file: ConfigFile,
    raw: toml::Table,
}

impl LoadedConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text).map_err(|e| CliError::usage(format!("--config {}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> std::result::Result<Self, toml::de::Error> {
        let raw: toml::Table = toml::from_str(text)?;
        let file: ConfigFile = toml::from_str(text)?;
        Ok(Self { file, raw })
    }

    /// Whether `section.key1.key2...` is set in the file.
    pub fn has_key(&self, path: &[&str]) -> bool {
        let mut cur = &self.raw;
        for (i, k) in path.iter().enumerate() {
            match cur.get(*k) {
                Some(toml::Value::Table(t)) if i + 1 < path.len() => cur = t,
                Some(_) if i + 1 == path.len() => return true,
                _ => return false,
            }
        }
        false
    }
}

/// Resolves a required path, naming the flag when it is missing.
pub fn required(value: Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    value.ok_or_else(|| CliError::usage(format!("missing required {flag} (flag or config key)")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = LoadedConfig::parse("").unwrap();
        assert_eq!(c.file.segment.pipeline, PipelineConfig::default());
        assert!(!c.has_key(&["segment"]));
    }

    #[test]
    fn nested_keys() {
        let c =
            LoadedConfig::parse("[segment.pipeline]\nvad_threshold = 0.7\n[reduce.tsne]\nperplexity = 5.0\n").unwrap();
        assert_eq!(c.file.segment.pipeline.vad_threshold, 0.7);
        assert_eq!(c.file.reduce.tsne.perplexity, 5.0);
        assert!(c.has_key(&["segment", "pipeline", "vad_threshold"]));
        assert!(!c.has_key(&["segment", "pipeline", "strategy"]));
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = LoadedConfig::parse("[segment]\nbogus = 1\n").unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
        assert!(LoadedConfig::parse("[nosuch]\n").is_err());
        assert!(LoadedConfig::parse("[segment.pipeline]\nstrategy = \"bogus\"\n").is_err());
    }
}
