use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid signature: {0}")]
    InvalidSignature(String),
    #[error("arity mismatch: relation {relation} has arity {expected}, got tuple of length {got}")]
    ArityMismatch {
        relation: String,
        expected: usize,
        got: usize,
    },
    #[error("unknown relation symbol {0}")]
    UnknownRelation(String),
    #[error("tuple entry {entry} out of range for window of size {size}")]
    OutOfRange { entry: usize, size: usize },
    #[error("tuple is not injective: {0:?}")]
    NotInjective(Vec<usize>),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("entry {0} of the free tuple collides with the parameter tuple")]
    ParameterCollision(usize),
    #[error("window of size {size} is not closed under the permutation (moves {point} to {image})")]
    WindowNotClosed {
        size: usize,
        point: usize,
        image: usize,
    },
    #[error("not a bijection: {0}")]
    NotBijective(String),
    #[error("unknown builtin family {0}")]
    UnknownFamily(String),
    #[error("window bound exceeded: {got} > {bound}")]
    BoundExceeded { got: usize, bound: usize },
    #[error("search exhausted: {0}")]
    SearchExhausted(String),
    #[error("invalid probability {0}")]
    InvalidProbability(String),
    #[error("frozen window of size {size} too small: assembly needs frozen index {needed} for symbol {symbol}")]
    FrozenWindowTooSmall {
        size: usize,
        needed: usize,
        symbol: String,
    },
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    #[error("invalid compact-set spec: {0}")]
    InvalidCompactSet(String),
    #[error("certificate verification failed at node {node}: {reason}")]
    CertificateFailure { node: String, reason: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
