use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("matrix not Hermitian (defect {0:.3e})")]
    NotHermitian(f64),
    #[error("not a density matrix: {0}")]
    NotDensity(String),
    #[error("grid degree {have} cannot resolve band limit {need}")]
    GridDegree { need: usize, have: usize },
    #[error("family mismatch: {0}")]
    Family(String),
    #[error("s-pairing mismatch: {0}")]
    Pairing(String),
    #[error("normalization violation: {0}")]
    Normalization(String),
    #[error("aliasing: {0}")]
    Aliasing(String),
    #[error("step bound violated: dt = {dt} exceeds limit {limit}")]
    StepBound { dt: f64, limit: f64 },
    #[error("grid coverage: {0}")]
    GridCoverage(String),
    #[error("rank deficient: condition number {0:.3e}")]
    RankDeficient(f64),
    #[error("seed required for sampling mode")]
    SeedRequired,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, PsError>;

impl From<std::io::Error> for PsError {
    fn from(e: std::io::Error) -> Self {
        PsError::Io(e.to_string())
    }
}
