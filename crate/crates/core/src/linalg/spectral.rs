//! Norms, polar factors and PSD matrix functions computed from the Jacobi
//! oracles.

use super::decomp::{singular_values, svd, sym_eigen};
use super::matrix::{DenseMatrix, SymPsdMatrix};
use crate::error::{Error, Result};

/// Default relative rank tolerance for [`polar_exact`]: `σ_i ≤ 1e−10 · σ_max`.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Relative eigenvalue floor below which a Gram matrix counts as singular.
pub const DEFAULT_PD_TOL: f64 = 1e-13;

/// Sum of singular values.
pub fn nuclear_norm(a: &DenseMatrix) -> f64 {
    singular_values(a).iter().sum()
}

/// Largest singular value.
pub fn operator_norm(a: &DenseMatrix) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// `U Vᵀ` from the thin SVD; rejects inputs with `σ_min ≤ 1e−10 · σ_max`.
pub fn polar_exact(a: &DenseMatrix) -> Result<DenseMatrix> {
    polar_exact_with_tol(a, DEFAULT_RANK_TOL)
}

pub fn polar_exact_with_tol(a: &DenseMatrix, rank_tol: f64) -> Result<DenseMatrix> {
    let s = svd(a);
    let tol = rank_tol * s.sigma_max();
    let sigma_min = s.sigma_min();
    if !(sigma_min > tol) {
        return Err(Error::RankDeficient { sigma_min, tol });
    }
    Ok(s.recompose(|_| 1.0))
}

/// A maximizer of `⟨A, X⟩` over the unit operator-norm ball that keeps only
/// the singular directions with `σ_i > 1e−10 · σ_max`. Equals the polar
/// factor for full-rank inputs and is zero for `A = 0`.
pub fn polar_pseudo(a: &DenseMatrix) -> DenseMatrix {
    let s = svd(a);
    let tol = DEFAULT_RANK_TOL * s.sigma_max();
    s.recompose(|x| if x > tol { 1.0 } else { 0.0 })
}

/// Euclidean projection onto `{X : ‖X‖_op ≤ radius}` by clipping singular
/// values. Returns the projection and whether any value was clipped.
pub fn project_operator_ball(a: &DenseMatrix, radius: f64) -> (DenseMatrix, bool) {
    let s = svd(a);
    if s.sigma_max() <= radius {
        return (a.clone(), false);
    }
    let excess = s.recompose(|x| (x - radius).max(0.0));
    (a - &excess, true)
}

/// Unique PSD square root; eigenvalues below zero (rounding) are clamped.
pub fn sqrt_psd(a: &SymPsdMatrix) -> SymPsdMatrix {
    sym_eigen(a).map(|l| libm::sqrt(l.max(0.0)))
}

/// `A^p` for PSD `A` and `p > 0`, clamping negative eigenvalues to zero.
pub fn psd_power(a: &SymPsdMatrix, p: f64) -> SymPsdMatrix {
    sym_eigen(a).map(|l| if l > 0.0 { libm::pow(l, p) } else { 0.0 })
}

/// `tr(A^p)` for PSD `A`.
pub fn trace_power(a: &SymPsdMatrix, p: f64) -> f64 {
    sym_eigen(a).values.iter().map(|&l| if l > 0.0 { libm::pow(l, p) } else { 0.0 }).sum()
}

/// `A^{−1/2}` from the eigendecomposition; `Singular` when
/// `λ_min ≤ 1e−13 · λ_max`.
pub fn inv_sqrt_exact(a: &SymPsdMatrix) -> Result<SymPsdMatrix> {
    let e = sym_eigen(a);
    let lmin = e.values.first().copied().unwrap_or(0.0);
    let lmax = e.values.last().copied().unwrap_or(0.0);
    if !(lmax > 0.0) || lmin <= DEFAULT_PD_TOL * lmax {
        return Err(Error::Singular(lmin));
    }
    Ok(e.map(|l| 1.0 / libm::sqrt(l)))
}

/// Ridge used when a Gram matrix may be singular:
/// `1e−8 · (1 + tr(M)/m)`.
pub fn gram_ridge(m: &SymPsdMatrix) -> f64 {
    1e-8 * (1.0 + m.trace() / m.dim() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian_matrix, stream_rng};

    #[test]
    fn norms_of_diagonal() {
        let a = DenseMatrix::from_diag(&[3.0, -4.0]);
        assert!((nuclear_norm(&a) - 7.0).abs() < 1e-15);
        assert!((operator_norm(&a) - 4.0).abs() < 1e-15);
        assert_eq!(nuclear_norm(&DenseMatrix::zeros(3, 5)), 0.0);
        assert!((operator_norm(&DenseMatrix::identity(6)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn polar_examples() {
        assert_eq!(polar_exact(&DenseMatrix::identity(3)).unwrap(), DenseMatrix::identity(3));
        let a = DenseMatrix::from_rows(&[&[0.0, 2.0], &[-2.0, 0.0]]).unwrap();
        let p = polar_exact(&a).unwrap();
        let expected = DenseMatrix::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]).unwrap();
        assert!((&p - &expected).max_abs() < 1e-15);
    }

    #[test]
    fn polar_rejects_rank_deficient() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        assert!(matches!(polar_exact(&a), Err(Error::RankDeficient { .. })));
        assert!(matches!(polar_exact(&DenseMatrix::zeros(2, 3)), Err(Error::RankDeficient { .. })));
        let p = polar_pseudo(&a);
        assert!((operator_norm(&p) - 1.0).abs() < 1e-12);
        assert!((a.inner(&p) - nuclear_norm(&a)).abs() < 1e-12);
        assert!(polar_pseudo(&DenseMatrix::zeros(2, 2)).is_zero());
    }

    #[test]
    fn polar_residuals_random_wide() {
        let mut rng = stream_rng(1, 0);
        let a = gaussian_matrix(&mut rng, 4, 7);
        let p = polar_exact(&a).unwrap();
        // Rows orthonormal for m ≤ n.
        let ppt = p.matmul_transpose(&p);
        assert!((&ppt - &DenseMatrix::identity(4)).frobenius_norm() <= 1e-10);
        // A = sqrt(A Aᵀ) · P for wide matrices.
        let h = sqrt_psd(&a.gram());
        assert!((&h.as_matrix().matmul(&p) - &a).frobenius_norm() <= 1e-8);
    }

    #[test]
    fn projection_clips_singular_values() {
        let a = DenseMatrix::from_diag(&[3.0, 0.5]);
        let (p, clipped) = project_operator_ball(&a, 1.0);
        assert!(clipped);
        assert!((&p - &DenseMatrix::from_diag(&[1.0, 0.5])).max_abs() < 1e-15);
        let (q, clipped) = project_operator_ball(&p, 1.0);
        assert!(!clipped);
        assert_eq!(q, p);
    }

    #[test]
    fn psd_functions() {
        let a = SymPsdMatrix::from_diag(&[4.0, 9.0]);
        assert!((sqrt_psd(&a).as_matrix() - &DenseMatrix::from_diag(&[2.0, 3.0])).max_abs() < 1e-15);
        assert!(sqrt_psd(&SymPsdMatrix::zeros(3)).as_matrix().is_zero());
        let inv = inv_sqrt_exact(&a).unwrap();
        assert!((inv.as_matrix() - &DenseMatrix::from_diag(&[0.5, 1.0 / 3.0])).max_abs() < 1e-15);
        assert!(matches!(inv_sqrt_exact(&SymPsdMatrix::from_diag(&[1.0, 0.0])), Err(Error::Singular(_))));
        assert!((trace_power(&a, 0.5) - 5.0).abs() < 1e-14);
        let q = psd_power(&a, 0.25);
        assert!((q.as_matrix()[(0, 0)] - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn sqrt_of_random_spd_squares_back() {
        let mut rng = stream_rng(2, 0);
        let b = gaussian_matrix(&mut rng, 6, 6);
        let a = b.gram().add_diag(0.5);
        let r = sqrt_psd(&a);
        let sq = r.as_matrix().matmul(r.as_matrix());
        assert!((&sq - a.as_matrix()).frobenius_norm() <= 1e-9 * a.frobenius_norm());
    }
}
