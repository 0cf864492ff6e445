//! Monte Carlo estimate of the inverse-mean of a noncentral Wishart matrix
//! `A = (Z + Y)(Z + Y)ᵀ`, `Z` standard Gaussian `m × n`.

use alloc::vec::Vec;

use super::mean_std;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, sym_eigen, DenseMatrix, SymPsdMatrix};
use crate::rng::{derive_seed, domain, gaussian_matrix, stream_rng};

#[derive(Debug, Clone, PartialEq)]
pub struct WishartEstimate {
    /// Largest eigenvalue of the sample mean of `A⁻¹`.
    pub top_eigenvalue: f64,
    /// Sample standard deviation of `uᵀ A⁻¹ u` along the top eigenvector `u`.
    pub sample_std: f64,
    pub samples: usize,
    /// `1 / (n − m − 1)`.
    pub bound: f64,
}

impl WishartEstimate {
    /// `bound + sigmas · σ̂ / √N`.
    pub fn threshold(&self, sigmas: f64) -> f64 {
        self.bound + sigmas * self.sample_std / libm::sqrt(self.samples as f64)
    }

    pub fn within(&self, sigmas: f64) -> bool {
        self.top_eigenvalue <= self.threshold(sigmas)
    }
}

pub fn wishart_inverse_check(
    m: usize,
    n: usize,
    y: &DenseMatrix,
    samples: usize,
    seed: u64,
) -> Result<WishartEstimate> {
    if n < m + 2 {
        return Err(Error::DegreesOfFreedom { m, n });
    }
    if y.shape() != (m, n) {
        return Err(Error::DimensionMismatch(alloc::format!("Y is {}×{}, expected {m}×{n}", y.rows(), y.cols())));
    }
    if samples < 2 {
        return Err(Error::InvalidConfig("wishart check needs at least 2 samples".into()));
    }
    let base = derive_seed(seed, domain::GRADIENT_SAMPLE, (m as u64) << 32 | n as u64);
    let eye = DenseMatrix::identity(m);
    let mut inverses = Vec::with_capacity(samples);
    let mut sum = DenseMatrix::zeros(m, m);
    for i in 0..samples as u64 {
        let mut w = gaussian_matrix(&mut stream_rng(base, i), m, n);
        w += y;
        let inv = cholesky_solve(&cholesky(&w.gram())?, &eye);
        sum += &inv;
        inverses.push(inv);
    }
    sum.scale_mut(1.0 / samples as f64);
    let eig = sym_eigen(&SymPsdMatrix::from_symmetrized(sum));
    let top = eig.values[m - 1];
    let u: Vec<f64> = (0..m).map(|r| eig.vectors[(r, m - 1)]).collect();
    let quad: Vec<f64> =
        inverses.iter().map(|a| (0..m).map(|r| u[r] * (0..m).map(|c| a[(r, c)] * u[c]).sum::<f64>()).sum()).collect();
    let (_, sample_std) = mean_std(&quad);
    Ok(WishartEstimate { top_eigenvalue: top, sample_std, samples, bound: 1.0 / (n - m - 1) as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_too_few_degrees_of_freedom() {
        assert_eq!(
            wishart_inverse_check(2, 3, &DenseMatrix::zeros(2, 3), 10, 0).unwrap_err(),
            Error::DegreesOfFreedom { m: 2, n: 3 }
        );
    }

    #[test]
    fn scalar_chi_square_inverse_mean() {
        // 1/χ²_6 has mean 1/4 and finite variance.
        let e = wishart_inverse_check(1, 6, &DenseMatrix::zeros(1, 6), 20_000, 3).unwrap();
        assert!((e.top_eigenvalue - 0.25).abs() < 4.0 * e.sample_std / libm::sqrt(2e4));
        assert!(e.within(3.0));
    }
}
