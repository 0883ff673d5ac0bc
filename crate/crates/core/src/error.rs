use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpinError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("spin factor dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("pair is not quasi-invertible: |r(x,y)| = {r_abs:e} is below tolerance {tol:e}")]
    QuasiInverseUndefined { r_abs: f64, tol: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("no convergence after {iterations} iterations (last step {last_step:e})")]
    NoConvergence { iterations: usize, last_step: f64 },

    #[error("iterate family is not orthogonal: |<T^{i}e, T^{j}e>| = {overlap:e}")]
    OrthogonalityViolated { i: usize, j: usize, overlap: f64 },

    #[error("condition not witnessed: no bracket with h(u) >= 1/t^2 on the scanned grid (max h = {max_h:e}, target {target:e})")]
    NoRoot { max_h: f64, target: f64 },

    #[error("no density witness found within {attempts} attempts")]
    WitnessNotFound { attempts: usize },

    #[error("invalid isometry: {0}")]
    InvalidIsometry(String),
}

pub type Result<T> = std::result::Result<T, SpinError>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(SpinError::DimensionMismatch { expected, found })
    }
}
