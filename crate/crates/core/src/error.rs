use thiserror::Error;

/// Errors raised by learners, oracles and the experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A caller broke a learner's declared input contract (usually a gradient norm bound).
    #[error("contract violation: {what} (observed {observed}, bound {bound})")]
    ContractViolation {
        what: String,
        observed: f64,
        bound: f64,
    },

    /// Something that the algorithm guarantees did not hold.
    #[error("internal invariant failed: {0}")]
    InvariantFailure(String),

    #[error("wealth underflow at round {round}: wealth = {wealth:e}")]
    WealthUnderflow { round: u64, wealth: f64 },

    /// The iterate Wealth·v is no longer representable. The learner's state
    /// stays valid; only predictions are unavailable.
    #[error("wealth overflow at round {round}: log(wealth) = {log_wealth}")]
    WealthOverflow { round: u64, log_wealth: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("at step {step}: {source}")]
    AtStep { step: u64, source: Box<Error> },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn contract(what: impl Into<String>, observed: f64, bound: f64) -> Self {
        Error::ContractViolation {
            what: what.into(),
            observed,
            bound,
        }
    }

    pub fn at_step(self, step: u64) -> Self {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }

    /// Strips any step annotation.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
