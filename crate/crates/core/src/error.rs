use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("polynomial is not harmonic; Laplacian residual = {residual}")]
    NotHarmonic { residual: String },

    #[error("degenerate linear form (all coefficients zero) at index {0}")]
    DegenerateForm(usize),

    #[error("cone has empty interior")]
    EmptyCone,

    #[error("point {0:?} is not in the open cone")]
    OutsideCone(Vec<f64>),

    #[error("moment of order {order} is unavailable for {kind}")]
    MomentUnavailable { kind: String, order: u32 },

    #[error("mixed quadratic fields: sqrt({0}) and sqrt({1})")]
    MixedFields(u64, u64),

    #[error("distribution {0} has no lattice structure; use the Monte Carlo walk engine")]
    NotLattice(String),

    #[error("start point {0:?} is not on a lattice compatible with exact arithmetic")]
    NotLatticeAligned(Vec<f64>),

    #[error("enumeration budget exceeded: {needed} paths > {budget}")]
    BudgetExceeded { needed: f64, budget: f64 },

    #[error("state space too large: {states} lattice states (~{bytes} bytes)")]
    StateSpaceTooLarge { states: u128, bytes: u128 },

    #[error("survival mass is zero")]
    ZeroMass,

    #[error("envelope violated: acceptance ratio {ratio} > 1 at {at:?}")]
    EnvelopeViolation { ratio: f64, at: Vec<f64> },

    #[error("harmonic value unavailable at {0:?}")]
    ValueUnavailable(Vec<f64>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
