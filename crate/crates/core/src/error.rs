use std::path::PathBuf;

use thiserror::Error;

use crate::model::Modality;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected n = {expected}, found n = {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported algebra dimension {0} (fixed tables exist for n = 1, 2, 4)")]
    UnsupportedDimension(usize),

    #[error("{op}: shape mismatch between {lhs:?} and {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("{0}: empty input")]
    EmptyInput(&'static str),

    #[error("{what} = {value} is not divisible by {divisor}")]
    Divisibility {
        what: String,
        value: usize,
        divisor: usize,
    },

    #[error("backward requires a scalar loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),

    #[error("backward already ran on this graph (higher-order and repeated backward are unsupported)")]
    DoubleBackward,

    #[error("loss does not depend on any tensor that requires a gradient")]
    NoGradient,

    #[error("batch norm in training mode needs at least 2 rows, got {0}")]
    BatchTooSmall(usize),

    #[error("target {target} out of range for {classes} classes")]
    TargetOutOfRange { target: usize, classes: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("missing modality: {0}")]
    MissingModality(Modality),

    #[error("invalid filter band: {0}")]
    InvalidBand(String),

    #[error("resampling from {from} Hz to {to} Hz would upsample; only decimation is supported")]
    UpsamplingUnsupported { from: f64, to: f64 },

    #[error("resampling from {from} Hz to {to} Hz needs an integer decimation factor")]
    NonIntegerFactor { from: f64, to: f64 },

    #[error("average reference needs at least 2 channels, got {0}")]
    SingleChannel(usize),

    #[error("missing EEG channel {0}")]
    MissingChannel(String),

    #[error("pre-trial GSR has {have} samples, baseline window needs {need}")]
    InsufficientPreTrial { need: usize, have: usize },

    #[error("{modality} covers {have_s:.3} s, need at least {need_s} s")]
    TrialTooShort {
        modality: Modality,
        have_s: f64,
        need_s: f64,
    },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("rating {0} outside 1..=9")]
    RatingOutOfRange(i64),

    #[error("class {class} has {count} samples, stratified split needs at least 2")]
    ClassTooSmall { class: usize, count: usize },

    #[error("schedule step {step} out of range for {total} steps")]
    StepOutOfRange { step: usize, total: usize },

    #[error("empty dataset: {0}")]
    EmptyDataset(&'static str),

    #[error("{}{}: {msg}", path.display(), row.map(|r| format!(", row {r}")).unwrap_or_default())]
    Dataset {
        path: PathBuf,
        row: Option<u64>,
        msg: String,
    },

    #[error("trial {trial}: {source}")]
    Trial {
        trial: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by caller-supplied data or configuration, as
    /// opposed to failures inside the engine.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::DoubleBackward | Error::NoGradient | Error::NonScalarLoss(_) => false,
            Error::Trial { source, .. } => source.is_input_error(),
            _ => true,
        }
    }

    pub(crate) fn shape(op: &'static str, lhs: &[usize], rhs: &[usize]) -> Self {
        Error::ShapeMismatch {
            op,
            lhs: lhs.to_vec(),
            rhs: rhs.to_vec(),
        }
    }

    pub(crate) fn dataset(path: impl Into<PathBuf>, row: Option<u64>, msg: impl Into<String>) -> Self {
        Error::Dataset {
            path: path.into(),
            row,
            msg: msg.into(),
        }
    }

    pub(crate) fn in_trial(self, trial: &str) -> Self {
        Error::Trial {
            trial: trial.to_string(),
            source: Box::new(self),
        }
    }
}
