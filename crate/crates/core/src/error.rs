use thiserror::Error;

/// Domain errors raised by the library.
///
/// Each variant has a stable name (see [`Error::name`]) that the command line
/// prints next to exit code 1.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },
    #[error("matrix is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },
    #[error("matrix is not normal (commutator norm {defect:.3e})")]
    NotNormal { defect: f64 },
    #[error("generator {index} is not anti-Hermitian (defect {defect:.3e})")]
    NotAntiHermitian { index: usize, defect: f64 },
    #[error("block rank {k} outside 1..={n}")]
    BadRank { k: usize, n: usize },
    #[error("point set is empty")]
    EmptySet,
    #[error("target is not majorized by the reference ({0})")]
    NotMajorized(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("leading block of the sequence is entirely zero")]
    DegenerateBlock,
    #[error("dimension {n} exceeds the brute-force limit {max}")]
    TooLarge { n: usize, max: usize },
    #[error("eigenvalues are not collinear (residual {residual:.3e})")]
    NotCollinear { residual: f64 },
    #[error("noise operator is zero")]
    ZeroNoise,
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("noise eigenvalues are degenerate (gap {gap:.3e})")]
    DegeneratePair { gap: f64 },
    #[error("noise operator has a single eigenvalue, no relaxation spot exists")]
    NoDistinctPair,
    #[error("Lie closure has dimension {dimension}, need {target}")]
    NotControllable { dimension: usize, target: usize },
    #[error("noise operator is not unital (|Γ_V(1)|₁ = {defect:.3e})")]
    NoiseNotUnital { defect: f64 },
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub fn name(&self) -> &'static str {
        match self {
            Error::NotHermitian { .. } => "NotHermitian",
            Error::NotUnitary { .. } => "NotUnitary",
            Error::NotNormal { .. } => "NotNormal",
            Error::NotAntiHermitian { .. } => "NotAntiHermitian",
            Error::BadRank { .. } => "BadRank",
            Error::EmptySet => "EmptySet",
            Error::NotMajorized(_) => "NotMajorized",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::DegenerateBlock => "DegenerateBlock",
            Error::TooLarge { .. } => "TooLarge",
            Error::NotCollinear { .. } => "NotCollinear",
            Error::ZeroNoise => "ZeroNoise",
            Error::BudgetExceeded(_) => "BudgetExceeded",
            Error::DegeneratePair { .. } => "DegeneratePair",
            Error::NoDistinctPair => "NoDistinctPair",
            Error::NotControllable { .. } => "NotControllable",
            Error::NoiseNotUnital { .. } => "NoiseNotUnital",
            Error::InvalidState(_) => "InvalidState",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
