use thiserror::Error;

/// Errors produced by the TMAC toolkit.
///
/// Every variant has a stable machine-readable name (see [`Error::name`]) which
/// the command-line tool prints on failure.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("unsupported hash algorithm {0:?}")]
    UnsupportedAlgorithm(String),

    #[error("unsupported epoch {0:?}")]
    UnsupportedEpoch(String),

    #[error("malformed suite name {name:?}: {reason}")]
    MalformedSuiteName { name: String, reason: &'static str },

    #[error("timestamp {now} precedes the epoch {epoch}")]
    TimeBeforeEpoch { now: u64, epoch: u64 },

    #[error("time step must be at least one second")]
    InvalidTimeStep,

    #[error("time counter overflow")]
    CounterOverflow,

    #[error("secret key must not be empty")]
    EmptyKey,

    #[error("key of {len} bytes is below the {min}-byte minimum")]
    WeakKeyLength { len: usize, min: usize },

    #[error("identifier of {len} bytes is below the {min}-byte minimum")]
    WeakIdentifier { len: usize, min: usize },

    #[error("identifier is already assigned to sender {0:?}")]
    DuplicateAssignment(String),

    #[error("acceptance window {0} is outside 1..={max}", max = crate::replay::MAX_ACCEPTANCE_WINDOW)]
    InvalidWindow(u64),

    #[error("malformed envelope: {0}")]
    MalformedEnvelope(String),

    #[error("envelope of {len} bytes exceeds the {max}-byte datagram limit")]
    EnvelopeTooLarge { len: usize, max: usize },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("malformed scenario: {0}")]
    MalformedScenario(String),

    #[error("clock cannot move backwards from {current} to {requested}")]
    ClockRegression { current: u64, requested: u64 },

    #[error("state file is corrupt: {0}")]
    StateCorrupt(String),

    #[error("state file does not match this verifier: {0}")]
    StateMismatch(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable identifier for scripts and logs.
    pub fn name(&self) -> &'static str {
        match self {
            Error::UnsupportedAlgorithm(_) => "UnsupportedAlgorithm",
            Error::UnsupportedEpoch(_) => "UnsupportedEpoch",
            Error::MalformedSuiteName { .. } => "MalformedSuiteName",
            Error::TimeBeforeEpoch { .. } => "TimeBeforeEpoch",
            Error::InvalidTimeStep => "InvalidTimeStep",
            Error::CounterOverflow => "CounterOverflow",
            Error::EmptyKey => "EmptyKey",
            Error::WeakKeyLength { .. } => "WeakKeyLength",
            Error::WeakIdentifier { .. } => "WeakIdentifier",
            Error::DuplicateAssignment(_) => "DuplicateAssignment",
            Error::InvalidWindow(_) => "InvalidWindow",
            Error::MalformedEnvelope(_) => "MalformedEnvelope",
            Error::EnvelopeTooLarge { .. } => "EnvelopeTooLarge",
            Error::DomainError(_) => "DomainError",
            Error::MalformedScenario(_) => "MalformedScenario",
            Error::ClockRegression { .. } => "ClockRegression",
            Error::StateCorrupt(_) => "StateCorrupt",
            Error::StateMismatch(_) => "StateMismatch",
            Error::Io(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
