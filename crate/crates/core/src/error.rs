use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("domain mismatch: {0}")]
    Domain(String),
    #[error("invalid mode {0}, expected 1, 2 or 3")]
    InvalidMode(usize),
    #[error("transform is not invertible (condition estimate {0:e})")]
    NotInvertible(f64),
    #[error("row {row} of the transform is neither real nor the conjugate of another row; not a real tubal ring")]
    NotRealRing { row: usize },
    #[error("input tensor is not real (max |Im| = {0:e})")]
    NotReal(f64),
    #[error(
        "invalid multirank {ranks:?}: slices {first} and {second} belong to the same idempotent \
         group and must have equal rank"
    )]
    InvalidMultirank {
        ranks: Vec<usize>,
        first: usize,
        second: usize,
    },
    #[error("rank out of range: {0}")]
    RankOutOfRange(String),
    #[error("weights must be strictly positive, got {0}")]
    NonPositiveWeight(f64),
    #[error("expected {expected} weights (one per idempotent group), got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("gamma must lie in (0, 1], got {0}")]
    GammaOutOfRange(f64),
    #[error("group index {index} out of range for a ring of length {ell}")]
    GroupIndex { index: usize, ell: usize },
    #[error("construction not applicable: {0}")]
    NotApplicable(&'static str),
    #[error("transform does not satisfy the Eckart-Young condition M = D·Q")]
    NotEckartYoung,
    #[error("imaginary residual {0:e} exceeds the realness tolerance")]
    ImaginaryResidual(f64),
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("{0} did not converge")]
    NoConvergence(&'static str),
}
