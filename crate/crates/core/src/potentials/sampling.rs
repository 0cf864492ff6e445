//! Monte Carlo averages of polar factors under Gaussian perturbation.
//!
//! Sample `i` draws its perturbation from stream `i` of the given seed, so the
//! result does not depend on evaluation order. With the `parallel` feature the
//! samples are evaluated on the rayon pool and then reduced in index order.

use alloc::vec::Vec;

use super::mean_std;
use crate::error::{Error, Result};
use crate::linalg::{svd, DenseMatrix, DEFAULT_RANK_TOL};
use crate::rng::{derive_seed, domain, gaussian_matrix, stream_rng};

/// Sample averages of `‖A⁽ⁱ⁾‖_*` and `polar(A⁽ⁱ⁾)` for
/// `A⁽ⁱ⁾ = S + c · F Z⁽ⁱ⁾`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleAverage {
    pub mean_nuclear: f64,
    pub nuclear_std: f64,
    pub mean_polar: DenseMatrix,
    /// Samples that hit a rank-deficient draw and were redrawn once.
    pub resampled: usize,
}

struct Sample {
    nuclear: f64,
    polar: DenseMatrix,
    resampled: bool,
}

fn draw(s: &DenseMatrix, factor: &DenseMatrix, scale: f64, seed: u64, index: u64) -> Option<(f64, DenseMatrix)> {
    let z = gaussian_matrix(&mut stream_rng(seed, index), s.rows(), s.cols());
    let mut a = factor.matmul(&z);
    a.scale_mut(scale);
    a += s;
    let d = svd(&a);
    if !(d.sigma_min() > DEFAULT_RANK_TOL * d.sigma_max()) {
        return None;
    }
    Some((d.singular_values.iter().sum(), d.recompose(|_| 1.0)))
}

fn sample(s: &DenseMatrix, factor: &DenseMatrix, scale: f64, seed: u64, index: u64) -> Result<Sample> {
    if let Some((nuclear, polar)) = draw(s, factor, scale, seed, index) {
        return Ok(Sample { nuclear, polar, resampled: false });
    }
    let reseed = derive_seed(seed, domain::RESAMPLE, index);
    match draw(s, factor, scale, reseed, index) {
        Some((nuclear, polar)) => Ok(Sample { nuclear, polar, resampled: true }),
        None => Err(Error::RankDeficient { sigma_min: 0.0, tol: DEFAULT_RANK_TOL }),
    }
}

#[cfg(feature = "parallel")]
fn run(s: &DenseMatrix, factor: &DenseMatrix, scale: f64, k: usize, seed: u64) -> Vec<Result<Sample>> {
    use rayon::prelude::*;
    if k >= 64 {
        return (0..k as u64).into_par_iter().map(|i| sample(s, factor, scale, seed, i)).collect();
    }
    (0..k as u64).map(|i| sample(s, factor, scale, seed, i)).collect()
}

#[cfg(not(feature = "parallel"))]
fn run(s: &DenseMatrix, factor: &DenseMatrix, scale: f64, k: usize, seed: u64) -> Vec<Result<Sample>> {
    (0..k as u64).map(|i| sample(s, factor, scale, seed, i)).collect()
}

/// Averages over `k` samples `A⁽ⁱ⁾ = S + scale · factor · Z⁽ⁱ⁾`, `Z` standard
/// Gaussian `m × n`. A rank-deficient draw is redrawn once from a derived
/// seed; a second failure is an error.
pub fn polar_sample_average(
    s: &DenseMatrix,
    factor: &DenseMatrix,
    scale: f64,
    k: usize,
    seed: u64,
) -> Result<SampleAverage> {
    let samples = run(s, factor, scale, k, seed);
    let mut nuclear = Vec::with_capacity(k);
    let mut sum = DenseMatrix::zeros(s.rows(), s.cols());
    let mut resampled = 0;
    for smp in samples {
        let smp = smp?;
        nuclear.push(smp.nuclear);
        sum += &smp.polar;
        resampled += usize::from(smp.resampled);
    }
    sum.scale_mut(1.0 / k as f64);
    let (mean_nuclear, nuclear_std) = mean_std(&nuclear);
    Ok(SampleAverage { mean_nuclear, nuclear_std, mean_polar: sum, resampled })
}
