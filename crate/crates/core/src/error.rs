use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain violation at `{node}`: {reason}")]
    Domain { node: String, reason: String },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("division by a jet with zero constant term")]
    ZeroDivisor,
    #[error("derivative order {requested} exceeds jet order {order}")]
    OrderExceeded { requested: usize, order: usize },
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("not elliptic: sampled min |a0| = {min:e} below threshold {threshold:e}")]
    NotElliptic { min: f64, threshold: f64 },
    #[error("series diverges: {0}")]
    Divergent(String),
    #[error("quadrature did not converge: achieved {achieved:e}, requested {requested:e}")]
    NoConvergence { achieved: f64, requested: f64 },
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
