//! Speech/noise classification of embeddings.
//!
//! Inputs are L1-normalised, scored by a linear SVM and mapped to a speech
//! probability with a Platt sigmoid, `p = 1 / (1 + exp(A s + B))`.

mod platt;
mod svm;
mod threshold;

pub use platt::{fit_sigmoid, platt_calibrate, stratified_folds, SigmoidFit};
pub use svm::{train_linear_svm, LinearSvm, Loss};
pub use threshold::{select_threshold, ThresholdSelection};

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Speech,
    Noise,
}

impl Label {
    /// `+1` for speech, `-1` for noise.
    pub fn sign(self) -> f64 {
        match self {
            Label::Speech => 1.0,
            Label::Noise => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::Speech => Label::Noise,
            Label::Noise => Label::Speech,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Speech => "speech",
            Label::Noise => "noise",
        }
    }
}

impl std::str::FromStr for Label {
    type Err = ClassifierError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "speech" => Ok(Label::Speech),
            "noise" | "non_speech" | "nonspeech" => Ok(Label::Noise),
            other => Err(ClassifierError::BadModel(format!("unknown class label '{other}'"))),
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledEmbedding {
    pub values: Vec<f64>,
    pub label: Label,
    pub source_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub c: f64,
    pub max_iter: usize,
    pub tolerance: f64,
    pub folds: usize,
    pub seed: u64,
    pub loss: Loss,
    /// Scale C per class by `n / (2 n_class)`.
    pub balance_classes: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            max_iter: 1000,
            tolerance: 1e-4,
            folds: 3,
            seed: 0,
            loss: Loss::SquaredHinge,
            balance_classes: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(ClassifierError::InvalidConfig(format!("C must be positive, got {}", self.c)));
        }
        if self.folds < 2 {
            return Err(ClassifierError::InvalidConfig(format!("need at least 2 folds, got {}", self.folds)));
        }
        if !(self.tolerance > 0.0) || self.max_iter == 0 {
            return Err(ClassifierError::InvalidConfig("tolerance and max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub c: f64,
    pub folds: usize,
    pub seed: u64,
    pub loss: Loss,
    pub num_speech: usize,
    pub num_noise: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedLinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub calib_a: f64,
    pub calib_b: f64,
    pub decision_threshold: f64,
    pub metadata: TrainingMetadata,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u16,
    #[serde(flatten)]
    model: CalibratedLinearModel,
}

const MODEL_FORMAT: &str = "xvad-calibrated-linear-model";

impl CalibratedLinearModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Raw SVM score of an already-normalised vector.
    pub fn score(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    pub fn probability_from_score(&self, s: f64) -> f64 {
        sigmoid_prob(self.calib_a, self.calib_b, s)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.weights.iter().all(|v| v.is_finite())
            && self.bias.is_finite()
            && self.calib_a.is_finite()
            && self.calib_b.is_finite();
        if !finite {
            return Err(ClassifierError::BadModel("non-finite parameter".into()));
        }
        if !(0.0..=1.0).contains(&self.decision_threshold) {
            return Err(ClassifierError::BadModel(format!(
                "decision threshold {} outside [0, 1]",
                self.decision_threshold
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile { format: MODEL_FORMAT.into(), version: crate::FORMAT_VERSION, model: self.clone() };
        serde_json::to_string_pretty(&file).expect("model serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| ClassifierError::BadModel(e.to_string()))?;
        if file.format != MODEL_FORMAT {
            return Err(ClassifierError::BadModel(format!("unexpected format '{}'", file.format)));
        }
        if file.version != crate::FORMAT_VERSION {
            return Err(ClassifierError::BadModel(format!("unsupported version {}", file.version)));
        }
        file.model.validate()?;
        Ok(file.model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("NonFiniteInput: vector contains NaN or infinity")]
    NonFiniteInput,
    #[error("SingleClassData: training data must contain both speech and noise")]
    SingleClassData,
    #[error("InsufficientData: each class needs at least {needed} examples, smallest has {found}")]
    InsufficientData { needed: usize, found: usize },
    #[error("NonConvergence: no convergence after {0} epochs")]
    NonConvergence(usize),
    #[error("CalibrationDegenerate: all calibration scores are identical")]
    CalibrationDegenerate,
    #[error("DimMismatch: expected {expected} values, got {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("NoNegatives: threshold selection needs at least one negative example")]
    NoNegatives,
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error("BadModel: {0}")]
    BadModel(String),
    #[error("IoFailure: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ClassifierError>;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sigmoid_prob(a: f64, b: f64, s: f64) -> f64 {
    let z = a * s + b;
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// `x / sum |x_i|`; the zero vector is returned unchanged.
pub fn l1_normalize(x: &[f64]) -> Result<Vec<f64>> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(ClassifierError::NonFiniteInput);
    }
    let norm: f64 = x.iter().map(|v| v.abs()).sum();
    if norm == 0.0 {
        return Ok(x.to_vec());
    }
    Ok(x.iter().map(|v| v / norm).collect())
}

/// Label and speech probability for a raw embedding.
pub fn predict(model: &CalibratedLinearModel, x: &[f64]) -> Result<(Label, f64)> {
    if x.len() != model.dim() {
        return Err(ClassifierError::DimMismatch { expected: model.dim(), found: x.len() });
    }
    let p = model.probability_from_score(model.score(&l1_normalize(x)?));
    let label = if p >= model.decision_threshold { Label::Speech } else { Label::Noise };
    Ok((label, p))
}
