use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter is outside its admissible domain.
    #[error("invalid {field}: {reason}")]
    Validation { field: &'static str, reason: String },

    #[error("unsupported method combination: {0}")]
    UnsupportedMethod(String),

    #[error("no minority to weight")]
    NoMinority,

    /// The mirror-image component needs at least as many majority slots as
    /// minority members on the dimension (2m <= n).
    #[error("mirror construction undefined: m = {m} exceeds n/2 with n = {n}")]
    MirrorUndefined { n: f64, m: f64 },

    #[error("ratio output requires a nonzero original mean")]
    ZeroOriginalMean,

    #[error("ballot {voter_id}: cost {cost} exceeds budget {budget} by {excess}")]
    OverBudget {
        voter_id: String,
        cost: f64,
        budget: f64,
        excess: f64,
    },

    #[error("ballot {voter_id}: negative or non-finite votes on dimension {dim}")]
    NegativeVotes { voter_id: String, dim: usize },

    #[error("ballot {voter_id}: {reason}")]
    MalformedBallot { voter_id: String, reason: String },

    #[error("duplicate ballot for voter {0}")]
    DuplicateVoter(String),

    #[error("no voter is active on dimension {0}")]
    EmptyDistribution(usize),

    #[error("dimension {dim} out of range for k = {k}")]
    DimensionOutOfRange { dim: usize, k: usize },

    #[error("trial {trial}: classified {found} minority ballots, expected {expected}")]
    ClassificationMismatch {
        trial: usize,
        expected: usize,
        found: usize,
    },

    #[error("ballot file: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn validation(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            field,
            reason: reason.into(),
        }
    }
}
