use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("not a unit vector: |x| = {norm}")]
    NotUnit { norm: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("tangent basis vector {index} is not an orthonormal tangent vector (defect {defect:e})")]
    BadTangentBasis { index: usize, defect: f64 },

    #[error("point {point:?} lies outside the longitude chart")]
    OutsideChart { point: Vec<f64> },

    #[error("frame rows are not orthonormal (defect {defect:e})")]
    NotOrthonormal { defect: f64 },

    #[error("Jordan angle {index} is a right angle; v is infinite")]
    InfiniteV { index: usize },

    #[error("degenerate induced metric (condition estimate {condition:e})")]
    DegenerateMetric { condition: f64 },

    #[error("stencil leaves the chart at parameter {param:?}")]
    OutsideDomain { param: Vec<f64> },

    #[error("point is not in Omega: {0}")]
    NotInOmega(String),

    #[error("F has a pole here: 2τ + t − rt/τ = {denominator:e}")]
    Pole { denominator: f64 },

    #[error("v = {v} is not below 3")]
    NotSubcritical { v: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("unsupported: {0}")]
    Unsupported(&'static str),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
