//! Dense linear algebra: matrix types, reference decompositions, spectral
//! functions and Newton–Schulz kernels.

mod decomp;
mod kernels;
mod matrix;
mod spectral;

pub use decomp::{cholesky, cholesky_solve, singular_values, svd, sym_eigen, Svd, SymEigen};
pub use kernels::{
    augmented_ns_flops, inv_sqrt_coupled_ns, inv_sqrt_ns_flops, polar_augmented_ns, polar_ns, polar_ns_flops,
    polar_ns_with, KernelReport, NsOptions,
};
pub use matrix::{DenseMatrix, SymPsdMatrix};
pub use spectral::{
    gram_ridge, inv_sqrt_exact, nuclear_norm, operator_norm, polar_exact, polar_exact_with_tol, polar_pseudo,
    project_operator_ball, psd_power, sqrt_psd, trace_power, DEFAULT_PD_TOL, DEFAULT_RANK_TOL,
};
