//! Newton–Schulz kernels: polar factor, coupled inverse square root and the
//! augmented block recursion that yields the leading block of `polar([S L])`
//! from `S` and `L Lᵀ` alone.
//!
//! Each kernel reports its iteration count, final residual and a leading-order
//! flop estimate.

use super::decomp::cholesky;
use super::matrix::{DenseMatrix, SymPsdMatrix};
use crate::error::{Error, Result};

/// Outcome of an iterative kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelReport {
    pub iterations: usize,
    pub residual: f64,
    pub flops_estimate: u64,
    pub converged: bool,
}

/// Iteration budget and stopping tolerance shared by the Newton–Schulz kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NsOptions {
    pub max_iters: usize,
    pub tol: f64,
    /// Polar only: start from `A / σ̂_max` (power-iteration estimate) instead
    /// of `A / ‖A‖_F`.
    pub prescale: bool,
}

impl Default for NsOptions {
    fn default() -> Self {
        Self { max_iters: 100, tol: 1e-10, prescale: false }
    }
}

impl NsOptions {
    pub fn new(max_iters: usize, tol: f64) -> Self {
        Self { max_iters, tol, prescale: false }
    }
}

/// `4 K m² n`.
pub fn polar_ns_flops(iterations: usize, m: usize, n: usize) -> u64 {
    let (k, m, n) = (iterations as u64, m as u64, n as u64);
    4 * k * m * m * n
}

/// `6 K m³`.
pub fn inv_sqrt_ns_flops(iterations: usize, m: usize) -> u64 {
    let (k, m) = (iterations as u64, m as u64);
    6 * k * m * m * m
}

/// `4 m² n + K (2 m² n + 4 m³)`.
pub fn augmented_ns_flops(iterations: usize, m: usize, n: usize) -> u64 {
    let (k, m, n) = (iterations as u64, m as u64, n as u64);
    4 * m * m * n + k * (2 * m * m * n + 4 * m * m * m)
}

/// `½ (3I − B)` for square `B`.
fn half_three_minus(b: &DenseMatrix) -> DenseMatrix {
    let mut t = b.scale(-0.5);
    t.add_diag(1.5);
    t
}

fn identity_residual(b: &DenseMatrix) -> f64 {
    let mut r = b.clone();
    r.add_diag(-1.0);
    r.frobenius_norm()
}

fn finish(a: DenseMatrix, report: KernelReport) -> Result<(DenseMatrix, KernelReport)> {
    if report.converged {
        Ok((a, report))
    } else {
        Err(Error::NotConverged(report))
    }
}

/// Polar factor by the cubic Newton–Schulz iteration
/// `X ← ½ (3I − X Xᵀ) X` started from `X⁽⁰⁾ = A / ‖A‖_F`.
///
/// Stops once `‖X⁽ⁱ⁺¹⁾ − X⁽ⁱ⁾‖_F ≤ tol`. Tall inputs are processed as their
/// transpose so the Gram product is always `min(m,n)`-square; the flop
/// estimate is `4 K r² c` with `r = min(m,n)`, `c = max(m,n)`.
pub fn polar_ns(a: &DenseMatrix, max_iters: usize, tol: f64) -> Result<(DenseMatrix, KernelReport)> {
    polar_ns_with(a, &NsOptions::new(max_iters, tol))
}

pub fn polar_ns_with(a: &DenseMatrix, opts: &NsOptions) -> Result<(DenseMatrix, KernelReport)> {
    let fro = a.frobenius_norm();
    if fro == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    if !fro.is_finite() {
        return Err(Error::NonFinite);
    }
    let tall = a.rows() > a.cols();
    let work = if tall { a.transpose() } else { a.clone() };
    let (r, c) = work.shape();

    let scale = if opts.prescale { 1.01 * power_sigma_max(&work, 20).max(fro / libm::sqrt(3.0)) } else { fro };
    let mut x = work.scale(1.0 / scale);
    let mut report = KernelReport { iterations: 0, residual: f64::INFINITY, flops_estimate: 0, converged: false };
    while report.iterations < opts.max_iters {
        let t = half_three_minus(&x.matmul_transpose(&x));
        let next = t.matmul(&x);
        report.iterations += 1;
        report.residual = (&next - &x).frobenius_norm();
        x = next;
        if report.residual <= opts.tol {
            report.converged = true;
            break;
        }
    }
    report.flops_estimate = polar_ns_flops(report.iterations, r, c);
    finish(if tall { x.transpose() } else { x }, report)
}

/// Lower estimate of `σ_max(A)` for a wide `A` by power iteration on `A Aᵀ`.
fn power_sigma_max(a: &DenseMatrix, steps: usize) -> f64 {
    let m = a.rows();
    let gram = a.matmul_transpose(a);
    let mut v = DenseMatrix::from_fn(m, 1, |i, _| 1.0 + (i as f64) / (m as f64));
    let mut lambda = 0.0;
    for _ in 0..steps {
        let w = gram.matmul(&v);
        let nw = w.frobenius_norm();
        let nv = v.frobenius_norm();
        if nw == 0.0 {
            break;
        }
        lambda = nw / nv;
        v = w.scale(1.0 / nw);
    }
    libm::sqrt(lambda)
}

/// `A^{−1/2}` by the coupled Newton–Schulz iteration with
/// `Y⁽⁰⁾ = A/√‖A‖_F`, `Z⁽⁰⁾ = I/√‖A‖_F`:
/// `T = ½(3I − Z Y)`, `Y ← Y T`, `Z ← T Z`.
///
/// `Y = A Z` holds throughout, so the residual `‖Z Y − I‖_F = ‖Z A Z − I‖_F` is
/// checked before every update and the iteration stops once it is `≤ tol`.
pub fn inv_sqrt_coupled_ns(a: &SymPsdMatrix, max_iters: usize, tol: f64) -> Result<(DenseMatrix, KernelReport)> {
    cholesky(a)?;
    let m = a.dim();
    let c = libm::sqrt(a.frobenius_norm());
    let mut y = a.as_matrix().scale(1.0 / c);
    let mut z = DenseMatrix::identity(m).scale(1.0 / c);
    let mut report = KernelReport { iterations: 0, residual: f64::INFINITY, flops_estimate: 0, converged: false };
    loop {
        let zy = z.matmul(&y);
        report.residual = identity_residual(&zy);
        if report.residual <= tol {
            report.converged = true;
            break;
        }
        if report.iterations == max_iters {
            break;
        }
        let t = half_three_minus(&zy);
        y = y.matmul(&t);
        z = t.matmul(&z);
        report.iterations += 1;
    }
    z.symmetrize();
    report.flops_estimate = inv_sqrt_ns_flops(report.iterations, m);
    finish(z, report)
}

/// Leading `m × n` block of `polar([S L])` given `LLT = L Lᵀ`, without forming
/// `L`: `T = ½(3I − B)`, `X ← T X`, `B ← T B T` from `X⁽⁰⁾ = S/‖Ŝ‖_F`,
/// `B⁽⁰⁾ = (S Sᵀ + LLT)/‖Ŝ‖_F²` where `‖Ŝ‖_F² = ‖S‖_F² + tr(LLT)`.
///
/// `B` tracks `X̂ X̂ᵀ` of the full augmented iterate, so the stopping test is
/// `‖B − I‖_F ≤ tol`.
pub fn polar_augmented_ns(
    s: &DenseMatrix,
    llt: &SymPsdMatrix,
    max_iters: usize,
    tol: f64,
) -> Result<(DenseMatrix, KernelReport)> {
    let m = s.rows();
    if llt.dim() != m {
        return Err(Error::DimensionMismatch(alloc::format!(
            "augmentation Gram is {0}×{0}, expected {1}×{1}",
            llt.dim(),
            m
        )));
    }
    cholesky(llt)?;
    let norm_sq = s.frobenius_norm_sq() + llt.trace();
    let mut x = s.scale(1.0 / libm::sqrt(norm_sq));
    let mut b = &s.matmul_transpose(s) + llt.as_matrix();
    b.scale_mut(1.0 / norm_sq);
    let mut report = KernelReport { iterations: 0, residual: f64::INFINITY, flops_estimate: 0, converged: false };
    loop {
        report.residual = identity_residual(&b);
        if report.residual <= tol {
            report.converged = true;
            break;
        }
        if report.iterations == max_iters {
            break;
        }
        let t = half_three_minus(&b);
        x = t.matmul(&x);
        b = t.matmul(&b).matmul(&t);
        b.symmetrize();
        report.iterations += 1;
    }
    report.flops_estimate = augmented_ns_flops(report.iterations, m, s.cols());
    finish(x, report)
}
