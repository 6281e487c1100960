use thiserror::Error;

use crate::types::{Log, ValidatorId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoreError {
    #[error("log must start with the genesis block")]
    MissingGenesis,
    #[error("genesis block may only appear at the start of a log")]
    MisplacedGenesis,
    #[error("empty set of logs")]
    EmptySet,
    #[error("incompatible logs {a:?} and {b:?} in a set expected to form a chain")]
    IncompatibleSet { a: Log, b: Log },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GaError {
    #[error("no snapshot recorded at tick {0}")]
    MissingSnapshot(u64),
    #[error("tick {0} is not a snapshot tick for this instance")]
    NotSnapshotTick(u64),
    #[error("grade {0} is out of range for this instance")]
    BadGrade(u8),
    #[error("conflicting logs {a:?} and {b:?} both passed the output threshold")]
    IncompatibleOutput { a: Log, b: Log },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Ga(#[from] GaError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("validator {validator} decided {new:?}, conflicting with its earlier decision {old:?}")]
    SafetyViolation { validator: ValidatorId, old: Log, new: Log },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("line {line}: {field}: {message}")]
    Parse { line: usize, field: String, message: String },
    #[error("{0}")]
    Semantic(String),
    #[error("json: {0}")]
    Json(String),
}

impl ScenarioError {
    pub(crate) fn parse(line: usize, field: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Parse { line, field: field.into(), message: message.into() }
    }

    pub(crate) fn semantic(message: impl Into<String>) -> Self {
        ScenarioError::Semantic(message.into())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("asynchrony window of {pi} views needs pi < eta (eta = {eta})")]
    PiGeEta { pi: u64, eta: String },
    #[error("trace does not hold enough decisions for metrics")]
    InsufficientTrace,
    #[error("trace has no RUN_STARTED header")]
    MissingHeader,
    #[error("trace line {line}: {message}")]
    BadTrace { line: usize, message: String },
}
