use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("arm index {arm} out of range for {arm_count} arms")]
    ArmOutOfRange { arm: usize, arm_count: usize },

    #[error("model index {index} out of range for {model_count} models")]
    ModelOutOfRange { index: usize, model_count: usize },

    #[error("arm count mismatch: {left} vs {right}")]
    ArmCountMismatch { left: usize, right: usize },

    #[error("model subset is empty")]
    EmptyModelSubset,

    #[error("arm set is empty")]
    EmptyArmSet,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("observation for arm {got} but {expected}")]
    UnexpectedObservation { got: usize, expected: String },

    #[error("reward {reward} outside the support of {kind} rewards")]
    RewardOutOfSupport { reward: f64, kind: &'static str },

    #[error("{0}")]
    AssumptionViolated(String),

    #[error("optimistic-structure test needs elimination sequences")]
    MissingSequences,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed document {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("run failed (algorithm {algorithm}, seed {seed}): {source}")]
    RunFailed {
        algorithm: String,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
