use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("dimension {0} outside the supported range 1..=64")]
    UnsupportedDimension(usize),
    #[error("operator is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("state vector has zero norm")]
    ZeroState,
    #[error("non-finite entries in {0}")]
    NonFinite(&'static str),
    #[error("operator is not Hermitian (deviation {deviation:e})")]
    NonHermitianInput { deviation: f64 },
    #[error("estimated propagation error {estimate:e} exceeds tolerance {tol:e} at max_step {max_step}")]
    StepFailure { estimate: f64, tol: f64, max_step: f64 },
    #[error("time {t} is not interior to [{lo}, {hi}] for differencing step {h}")]
    BoundaryTime { t: f64, lo: f64, hi: f64, h: f64 },
    #[error("time {t} outside the domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },
    #[error("trivialization singular at t = {t} (condition number {cond:e})")]
    SingularTrivialization { t: f64, cond: f64 },
    #[error("seed basis is singular (condition number {cond:e})")]
    SingularSeed { cond: f64 },
    #[error("gauge transformation singular at t = {t} (condition number {cond:e})")]
    SingularGauge { t: f64, cond: f64 },
    #[error("state set does not span the space (rank {rank} < {dim})")]
    InsufficientStates { rank: usize, dim: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
