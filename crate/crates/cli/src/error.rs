use std::path::PathBuf;

use thiserror::Error;
use xvad::{analysis, baseline, classifier, dataprep, frontend, metrics, pipeline, segment, xvector};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("Usage: {0}")]
    Usage(String),
    #[error("Frontend: {0}")]
    Frontend(#[from] frontend::FrontendError),
    #[error("XVector: {0}")]
    XVector(#[from] xvector::XVectorError),
    #[error("Classifier: {0}")]
    Classifier(#[from] classifier::ClassifierError),
    #[error("Baseline: {0}")]
    Baseline(#[from] baseline::BaselineError),
    #[error("Pipeline: {0}")]
    Pipeline(#[from] pipeline::PipelineError),
    #[error("Metrics: {0}")]
    Metrics(#[from] metrics::MetricsError),
    #[error("Dataprep: {0}")]
    Dataprep(#[from] dataprep::DataprepError),
    #[error("Analysis: {0}")]
    Analysis(#[from] analysis::AnalysisError),
    #[error("SegmentFormat: {0}")]
    SegmentFormat(#[from] segment::SegmentFormatError),
    #[error("Io: {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
