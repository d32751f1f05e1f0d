use thiserror::Error;

/// Error type shared by the whole crate. Variant names follow the error
/// contracts of the operations that raise them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("malformed LP: {0}")]
    MalformedLp(String),

    #[error("pricing must be uniform for this operation")]
    NotUniform,

    #[error("start allocation is not compatible")]
    NotCompatibleStart,

    #[error("input allocation is not stable: {0}")]
    NotStableInput(String),

    #[error("instance exceeds the exact-enumeration size cap: {0}")]
    SizeCapExceeded(String),

    #[error("solver event budget exceeded ({0}); this indicates a bug")]
    EventBudgetExceeded(String),

    #[error("solver assertion failed: {0}; this indicates a bug")]
    AssertionFailed(String),

    #[error("direct stability check and its cross-check disagree: {0}; this indicates a bug")]
    InternalInconsistency(String),

    #[error("allocation returned by the revenue optimizer failed the stability check; this indicates a bug")]
    StabilityCheckFailed,

    #[error("equilibrium iteration did not converge (last gap {gap:e})")]
    NoConvergence { gap: f64 },

    #[error("parameters outside the regime of the closed form: {0}")]
    OutOfRegime(String),

    #[error("market must have exactly two sellers")]
    NotDuopoly,

    #[error("not a 3SAT-3 instance: {0}")]
    Not3Sat3(String),

    #[error("not a valid bipartite graph: {0}")]
    NotBipartite(String),

    #[error("invalid prices: {0}")]
    InvalidPrices(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
