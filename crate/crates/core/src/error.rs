use alloc::string::String;

use crate::linalg::KernelReport;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is rank deficient: smallest singular value {sigma_min:e} <= {tol:e}")]
    RankDeficient { sigma_min: f64, tol: f64 },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("matrix is singular: smallest eigenvalue {0:e}")]
    Singular(f64),
    #[error("input matrix is zero")]
    ZeroMatrix,
    #[error("iteration did not converge after {} steps (residual {:e})", .0.iterations, .0.residual)]
    NotConverged(KernelReport),
    #[error("quadratic subproblem did not converge (residual {residual:e} after {iterations} iterations)")]
    QpNotConverged { residual: f64, iterations: usize },
    #[error("requires n ≥ m+2 (got m = {m}, n = {n})")]
    DegreesOfFreedom { m: usize, n: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
