//! Error types shared across the analysis pipeline.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry in {0}")]
    NonFiniteEntry(String),

    #[error("condition 1 unsatisfiable: time contraction of the constraint fields has rank {rank}, need {required}")]
    Condition1Unsatisfiable { rank: usize, required: usize },

    #[error("constraint count mismatch: Geroch splitting yields {found} constraint fields, expected e - u = {expected}; constraints are not all Geroch-generated")]
    CountMismatch { found: usize, expected: usize },

    #[error("projected M field has a non-vanishing time component (residual {residual:.3e}); basis is inconsistent with the Geroch equations")]
    LemmaM0Violation { residual: f64 },

    #[error("time slab of the principal symbol is rank deficient: rank {rank}, need {required}")]
    ConditionN0Failure { rank: usize, required: usize },

    #[error("reduction family coefficient vector has length {found}, family dimension is {expected}")]
    InvalidCoefficientLength { found: usize, expected: usize },

    #[error("generalized eigenvalue {re}{im:+}i has a non-negligible imaginary part; the system is not hyperbolic in this direction")]
    ComplexPhysicalEigenvalue { re: f64, im: f64 },

    #[error("subspace dimension mismatch for eigenvalue {eigenvalue}: {context}")]
    SubspaceDimensionMismatch { eigenvalue: f64, context: String },

    #[error("requested constraint velocity {value} collides with an inherited eigenvalue or a duplicate target")]
    SingularVelocityAssignment { value: f64 },

    #[error("condition v fails at this wave vector ({deficit} missing left-kernel directions); the requested operation needs the M fields to span the kernel")]
    ConditionVFailure { deficit: usize },

    #[error("lapse must be positive, got {0}")]
    InvalidLapse(f64),

    #[error("wave covector must have a nonzero spatial part")]
    ZeroWaveVector,

    #[error("unknown catalog name `{0}`")]
    UnknownCatalogName(String),

    #[error(transparent)]
    Linalg(#[from] ndarray_linalg::error::LinalgError),
}
