use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("invalid number {0:?}: expected p/q, an integer or a finite decimal")]
    Number(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
    #[error("invalid log-affine value {0:?}: expected <q>, ln2, <q>*ln2 or <q>+<q>*ln2")]
    LogAffine(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("empty set: at least one interval is required")]
    EmptySet,

    #[error("invalid interval [{lo}, {hi}]: lower endpoint exceeds upper")]
    InvalidInterval { lo: String, hi: String },

    #[error("interval parts are not in canonical form at index {index}")]
    NotCanonical { index: usize },

    #[error("refused: {0}")]
    Refused(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("derivative is unbounded at x = {0}")]
    InfiniteDerivative(String),

    #[error("invalid function: {0}")]
    InvalidFunction(String),

    #[error("invalid fragmentation: {0}")]
    InvalidFragmentation(String),

    #[error("enclosure could not be tightened to the requested width within the precision cap")]
    PrecisionExhausted,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
