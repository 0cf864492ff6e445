//! Action maps of the potential-based learners. Each returns the next action
//! `X_{t+1}` for cumulative gradient `S` and second-moment matrix `M`.
//!
//! The discount `β` enters only through the `G² β⁻² I` term of the
//! preconditioner Gram `G² β⁻² I + M`.

use crate::error::{Error, Result};
use crate::linalg::{
    cholesky, gram_ridge, inv_sqrt_coupled_ns, inv_sqrt_exact, polar_augmented_ns, polar_ns_with, polar_pseudo,
    sqrt_psd, DenseMatrix, NsOptions, SymPsdMatrix,
};
use crate::potentials::{eval_regularized, polar_sample_average, PotentialFamily, QpOptions};

/// A computed action together with the inner-solver iteration count.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub x: DenseMatrix,
    pub iterations: usize,
}

/// How a polar factor is computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolarMethod {
    /// From the SVD, keeping only nonzero singular directions.
    Exact,
    /// Newton–Schulz, falling back to the SVD if it fails to converge.
    NewtonSchulz(NsOptions),
}

/// How the inverse square root in the augmented-leader update is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamlPath {
    /// Eigendecomposition of `η² S Sᵀ + P`.
    Exact,
    /// Coupled Newton–Schulz inverse square root of `η² S Sᵀ + P`.
    CoupledNs,
    /// Augmented block recursion on `(η S, P)`.
    AugmentedNs,
}

impl FamlPath {
    pub fn name(self) -> &'static str {
        match self {
            FamlPath::Exact => "exact",
            FamlPath::CoupledNs => "coupled_ns",
            FamlPath::AugmentedNs => "augmented_ns",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [FamlPath::Exact, FamlPath::CoupledNs, FamlPath::AugmentedNs].into_iter().find(|p| p.name() == s)
    }
}

/// `polar(A)`; zero for `A = 0`.
pub fn polar_with(a: &DenseMatrix, method: PolarMethod) -> (DenseMatrix, usize) {
    match method {
        PolarMethod::Exact => (polar_pseudo(a), 0),
        PolarMethod::NewtonSchulz(opts) => match polar_ns_with(a, &opts) {
            Ok((p, rep)) => (p, rep.iterations),
            Err(Error::ZeroMatrix) => (DenseMatrix::zeros(a.rows(), a.cols()), 0),
            Err(Error::NotConverged(rep)) => {
                log::debug!("Newton–Schulz polar did not converge ({rep:?}); using the SVD");
                (polar_pseudo(a), rep.iterations)
            }
            Err(_) => (polar_pseudo(a), 0),
        },
    }
}

/// `G² β⁻² I + M`, plus a small ridge when `G = 0` leaves it singular.
pub fn preconditioner_gram(m: &SymPsdMatrix, g: f64, discount: f64) -> SymPsdMatrix {
    let shift = g * g / (discount * discount);
    if shift > 0.0 {
        m.add_diag(shift)
    } else {
        m.add_diag(gram_ridge(m))
    }
}

/// `L = √(G² β⁻² I + M)`.
pub fn preconditioner(m: &SymPsdMatrix, g: f64, discount: f64) -> SymPsdMatrix {
    sqrt_psd(&preconditioner_gram(m, g, discount))
}

/// Follow the leader: `−D · polar(S)`.
pub fn ftl_direction(s: &DenseMatrix, d: f64, method: PolarMethod) -> Direction {
    let (p, iterations) = polar_with(s, method);
    Direction { x: p.scale(-d), iterations }
}

/// Follow the augmented matrix leader:
/// `−η D (η² S Sᵀ + G² β⁻² I + M)^{−1/2} S`, equivalently `−D` times the
/// leading block of `polar([η S, L])` with `L Lᵀ = G² β⁻² I + M`.
#[allow(clippy::too_many_arguments)]
pub fn faml_direction(
    s: &DenseMatrix,
    m: &SymPsdMatrix,
    d: f64,
    g: f64,
    eta: f64,
    discount: f64,
    path: FamlPath,
    ns: &NsOptions,
) -> Result<Direction> {
    if s.is_zero() {
        return Ok(Direction { x: DenseMatrix::zeros(s.rows(), s.cols()), iterations: 0 });
    }
    let p = preconditioner_gram(m, g, discount);
    match path {
        FamlPath::Exact | FamlPath::CoupledNs => {
            let k = s.gram().scale(eta * eta).add(&p);
            let (inv, iterations) = if path == FamlPath::Exact {
                (inv_sqrt_exact(&k)?.into_matrix(), 0)
            } else {
                let (z, rep) = inv_sqrt_coupled_ns(&k, ns.max_iters, ns.tol)?;
                (z, rep.iterations)
            };
            Ok(Direction { x: inv.matmul(s).scale(-eta * d), iterations })
        }
        FamlPath::AugmentedNs => {
            let (x, rep) = polar_augmented_ns(&s.scale(eta), &p, ns.max_iters, ns.tol)?;
            Ok(Direction { x: x.scale(-d), iterations: rep.iterations })
        }
    }
}

/// Follow the perturbed leader with `k` Monte Carlo samples:
/// `−(D/k) Σᵢ polar(S + η⁻¹ L̃ Z⁽ⁱ⁾)`, `L̃ L̃ᵀ = G² β⁻² I + M` (Cholesky).
/// Deterministic in `sample_seed`.
#[allow(clippy::too_many_arguments)]
pub fn ftpl_direction(
    s: &DenseMatrix,
    m: &SymPsdMatrix,
    d: f64,
    g: f64,
    eta: f64,
    discount: f64,
    k: usize,
    sample_seed: u64,
) -> Result<Direction> {
    if k == 0 {
        return Err(Error::InvalidConfig("ftpl needs at least one sample".into()));
    }
    let factor = cholesky(&preconditioner_gram(m, g, discount))?;
    let avg = polar_sample_average(s, &factor, 1.0 / eta, k, sample_seed)?;
    Ok(Direction { x: avg.mean_polar.scale(-d), iterations: 0 })
}

/// Follow the regularized leader:
/// `D · argmin_{‖X‖_op≤1} ⟨S,X⟩ + (2η)⁻¹ tr(Xᵀ L X)`.
pub fn ftrl_direction(s: &DenseMatrix, l: &SymPsdMatrix, d: f64, eta: f64, qp: &QpOptions) -> Result<Direction> {
    let mut fam = PotentialFamily::regularized();
    fam.qp_tol = qp.tol;
    fam.qp_max_iters = qp.max_iters;
    let e = eval_regularized(s, &l.scale(1.0 / eta), &fam)?;
    Ok(Direction { x: e.gradient.scale(-d), iterations: e.iterations })
}
