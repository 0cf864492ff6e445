//! Robust matrix sensing with nonconvex ripples:
//! `f(X) = (1/m) Σ_k φ(⟨A_k, X⟩) + 0.5`, `φ(u) = |u| (1 − 0.9 cos 3u)`.

use alloc::vec::Vec;

use crate::linalg::DenseMatrix;
use crate::rng::{derive_seed, domain, gaussian_matrix, stream_rng};

/// A loss over `rows × cols` matrices with a (stochastic) subgradient oracle.
pub trait Objective {
    fn shape(&self) -> (usize, usize);
    fn loss(&self, w: &DenseMatrix) -> f64;
    /// Deterministic given `(w, sample_seed)`.
    fn gradient(&self, w: &DenseMatrix, sample_seed: u64) -> DenseMatrix;
}

pub fn ripple(u: f64) -> f64 {
    libm::fabs(u) * (1.0 - 0.9 * libm::cos(3.0 * u))
}

/// `sign(u)(1 − 0.9 cos 3u) + 2.7 |u| sin 3u`, taken as 0 at `u = 0`.
pub fn ripple_derivative(u: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    u.signum() * (1.0 - 0.9 * libm::cos(3.0 * u)) + 2.7 * libm::fabs(u) * libm::sin(3.0 * u)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSensing {
    pub d: usize,
    pub measurements: Vec<DenseMatrix>,
    /// Minibatch size for [`Objective::gradient`]; `None` is the full batch.
    pub batch: Option<usize>,
}

impl MatrixSensing {
    pub fn from_measurements(measurements: Vec<DenseMatrix>) -> Self {
        let d = measurements.first().map_or(0, |a| a.rows());
        Self { d, measurements, batch: None }
    }

    fn residuals<'a>(&'a self, w: &'a DenseMatrix) -> impl Iterator<Item = (&'a DenseMatrix, f64)> + 'a {
        self.measurements.iter().map(move |a| (a, a.inner(w)))
    }
}

/// `d × d` problem with `m_meas` i.i.d. standard Gaussian measurement matrices.
pub fn matrix_sensing_objective(d: usize, m_meas: usize, seed: u64) -> MatrixSensing {
    let measurements = (0..m_meas)
        .map(|k| gaussian_matrix(&mut stream_rng(derive_seed(seed, domain::OBJECTIVE, k as u64), 0), d, d))
        .collect();
    MatrixSensing { d, measurements, batch: None }
}

impl Objective for MatrixSensing {
    fn shape(&self) -> (usize, usize) {
        (self.d, self.d)
    }

    fn loss(&self, w: &DenseMatrix) -> f64 {
        let m = self.measurements.len() as f64;
        self.residuals(w).map(|(_, u)| ripple(u) + 0.5).sum::<f64>() / m
    }

    fn gradient(&self, w: &DenseMatrix, sample_seed: u64) -> DenseMatrix {
        let mut g = DenseMatrix::zeros(self.d, self.d);
        let total = self.measurements.len();
        match self.batch {
            Some(b) if b < total => {
                let mut rng = stream_rng(derive_seed(sample_seed, domain::GRADIENT_SAMPLE, 0), 0);
                for _ in 0..b {
                    let k = rand::Rng::random_range(&mut rng, 0..total);
                    let a = &self.measurements[k];
                    g.axpy(ripple_derivative(a.inner(w)), a);
                }
                g.scale_mut(1.0 / b as f64);
            }
            _ => {
                for (a, u) in self.residuals(w) {
                    g.axpy(ripple_derivative(u), a);
                }
                g.scale_mut(1.0 / total as f64);
            }
        }
        g
    }
}
