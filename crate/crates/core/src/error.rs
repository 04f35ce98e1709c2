use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value in {context} (norm {norm:e})")]
    NonFinite { context: &'static str, norm: f64 },

    #[error("eigensolver did not converge within {iterations} iterations")]
    ConvergenceFailure { iterations: usize },

    #[error("matrix is not symmetric positive definite (min eigenvalue/pivot {min_eig:e})")]
    NotSpd { min_eig: f64 },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: String, actual: String },

    #[error("unsupported dexpinv truncation order {0} (expected 1, 2 or 4)")]
    UnsupportedOrder(usize),

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("matrix is not symplectic (residual {residual:e})")]
    NotSymplectic { residual: f64 },

    #[error("model evaluation failed: {0}")]
    ModelEvalFailure(String),

    #[error("reference trajectory left the manifold at interval {interval}, sub-step {sub_step} (min eigenvalue {min_eig:e})")]
    ReferenceLeftManifold {
        interval: usize,
        sub_step: usize,
        min_eig: f64,
    },

    #[error("step {index} failed: {source}")]
    StepFailed {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn dims(expected: impl Into<String>, actual: impl Into<String>) -> Self {
        Error::DimMismatch {
            expected: expected.into(),
            actual: actual.into(),
        }
    }
}
