use thiserror::Error;

/// A velocity Verlet leg left the finite domain.
///
/// `step` is the 1-based time-step inside the leg at which a non-finite
/// gradient or state was first observed (0 means the initial half-kick).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("integration leg diverged at step {step} after {force_evals} force evaluations")]
pub struct DivergedLeg {
    pub step: usize,
    pub force_evals: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unknown target `{0}` (expected gaussian, double_well or banana)")]
    UnknownTarget(String),

    #[error("unknown observable `{0}`")]
    UnknownObservable(String),

    #[error(transparent)]
    Diverged(#[from] DivergedLeg),

    #[error("series has zero variance; effective sample size is undefined")]
    ZeroVariance,

    #[error("series too short: {len} values, at least {min} required")]
    SeriesTooShort { len: usize, min: usize },

    #[error("chain record is empty")]
    EmptyRecord,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
