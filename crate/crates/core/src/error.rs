use thiserror::Error;

use crate::trajectory::TargetId;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("invalid sample: gaze {gaze}, target {target} (coordinates must be finite)")]
pub struct InvalidSample {
    pub gaze: f64,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LayoutError {
    #[error("unsupported target count {0}: expected an even number from 6 to 24")]
    UnsupportedCount(usize),
    #[error("duplicate target id {0}")]
    DuplicateId(TargetId),
    #[error("layout has no targets")]
    Empty,
    #[error("invalid trajectory: {0}")]
    Trajectory(String),
    #[error("unknown symbol {0:?}")]
    UnknownLabel(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("window size must be at least 2, got {0}")]
    WindowTooSmall(usize),
    #[error("minimum duration must be at least 1 sample")]
    ZeroMinDuration,
    #[error("correlation threshold must lie in (0, 1], got {0}")]
    CorrelationThreshold(f64),
    #[error("slope interval must satisfy lo < hi, got [{lo}, {hi}]")]
    SlopeInterval { lo: f64, hi: f64 },
    #[error("threshold kind does not match method {0}")]
    ThresholdKind(&'static str),
    #[error("sample rate must be positive, got {0}")]
    SampleRate(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectorError {
    #[error("timestamp {t_ms} ms is not after the previous sample at {previous_ms} ms")]
    Ordering { t_ms: f64, previous_ms: f64 },
    #[error("invalid sample: non-finite gaze or target coordinate")]
    InvalidSample,
    #[error("target list does not match the configured layout: {0}")]
    LayoutMismatch(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl From<InvalidSample> for DetectorError {
    fn from(_: InvalidSample) -> Self {
        DetectorError::InvalidSample
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
}
