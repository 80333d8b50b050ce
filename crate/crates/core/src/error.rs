use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid condenser: {0}")]
    InvalidCondenser(String),

    #[error("the curve family is empty: E and F are not connected inside Ω")]
    EmptyFamily,

    #[error("non-finite value at node {0}")]
    NonFinite(usize),

    #[error("radius {radius} is below the grid resolution {resolution}")]
    BelowResolution { radius: f64, resolution: f64 },

    #[error("density is not admissible (residual {0})")]
    Inadmissible(f64),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{0} did not converge within the iteration cap")]
    NotConverged(String),

    #[error("snapped image set `{0}` violates the condenser invariants")]
    SnapOverlap(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
