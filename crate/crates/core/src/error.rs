use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("column {0} has zero variance")]
    ZeroVarianceColumn(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("design has no predictor columns")]
    EmptyDesign,

    #[error("iteration {m} out of range (path length {len})")]
    IterationOutOfRange { m: usize, len: usize },

    #[error("hat update with a zero column")]
    ZeroColumn,

    #[error("AICc denominator is not positive: trace {trace} with n = {n}")]
    DegenerateDenominator { trace: f64, n: usize },

    #[error("residual variance is zero")]
    ZeroSigma,

    #[error("no valid iteration to select from")]
    NoValidIteration,

    #[error("bad fold count {k} for {n} observations")]
    BadFoldCount { k: usize, n: usize },

    #[error("design matrix is singular or has p >= n")]
    SingularDesign,

    #[error("coordinate descent did not converge after {sweeps} sweeps (KKT gap {kkt_gap:e})")]
    NoConvergence { sweeps: usize, kkt_gap: f64 },

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("fixed-point bisection failed: {0}")]
    FixedPointFailure(String),

    #[error("sample {0} is constant after clipping and log transform")]
    ZeroVarianceSample(usize),

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    #[error("weakness parameter b = {0} must lie in (0, 1]")]
    BadWeakness(f64),

    #[error("greedy bound violated at step {step}: remainder {norm} > bound {bound}")]
    BoundViolation { step: usize, norm: f64, bound: f64 },

    #[error("csv: {0}")]
    Csv(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
