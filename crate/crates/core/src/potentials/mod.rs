//! Smoothings of the nuclear norm parametrised by a PSD matrix `L`.
//!
//! * regularized: `Ψᴿ(S;L) = max_{‖X‖_op≤1} ⟨S,X⟩ − ½ tr(XᵀLX) + ½ tr(L)`
//! * stochastic: `Ψˢ(S;L) = E ‖S + L Z‖_*` with Gaussian `Z`
//! * hyperbolic: `Ψᴴ(S;L) = tr √(S Sᵀ + L Lᵀ) = ‖[S L]‖_*`
//!
//! Each gradient is a point of the unit operator-norm ball.

mod admissibility;
mod qp;
mod sampling;
mod wishart;

pub use admissibility::{check_admissibility, AdmissibilityReport, AdmissibilityViolation};
pub use qp::{minimize_on_op_ball, qp_objective, QpOptions, QpSolution};
pub use sampling::{polar_sample_average, SampleAverage};
pub use wishart::{wishart_inverse_check, WishartEstimate};

use crate::error::{Error, Result};
use crate::linalg::{nuclear_norm, polar_pseudo, sym_eigen, DenseMatrix, SymPsdMatrix, DEFAULT_PD_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PotentialKind {
    Regularized,
    Stochastic,
    Hyperbolic,
}

impl PotentialKind {
    pub const ALL: [PotentialKind; 3] =
        [PotentialKind::Regularized, PotentialKind::Stochastic, PotentialKind::Hyperbolic];

    pub fn name(self) -> &'static str {
        match self {
            PotentialKind::Regularized => "regularized",
            PotentialKind::Stochastic => "stochastic",
            PotentialKind::Hyperbolic => "hyperbolic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// A potential family together with the parameters its evaluator needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialFamily {
    pub kind: PotentialKind,
    /// Stochastic only.
    pub mc_samples: usize,
    /// Stochastic only.
    pub rng_seed: u64,
    /// Regularized only.
    pub qp_tol: f64,
    /// Regularized only.
    pub qp_max_iters: usize,
}

impl PotentialFamily {
    pub fn hyperbolic() -> Self {
        Self { kind: PotentialKind::Hyperbolic, ..Self::base() }
    }

    pub fn regularized() -> Self {
        Self { kind: PotentialKind::Regularized, ..Self::base() }
    }

    pub fn stochastic(mc_samples: usize, rng_seed: u64) -> Self {
        Self { kind: PotentialKind::Stochastic, mc_samples, rng_seed, ..Self::base() }
    }

    fn base() -> Self {
        let qp = QpOptions::default();
        Self {
            kind: PotentialKind::Hyperbolic,
            mc_samples: 10_000,
            rng_seed: 0,
            qp_tol: qp.tol,
            qp_max_iters: qp.max_iters,
        }
    }

    pub fn qp_options(&self) -> QpOptions {
        QpOptions { tol: self.qp_tol, max_iters: self.qp_max_iters }
    }

    /// Evaluates `Ψ(S; L)` for the PSD parameter `L` itself: the hyperbolic
    /// family receives `L Lᵀ = L²` and the stochastic family uses `L` as the
    /// noise factor.
    pub fn evaluate(&self, s: &DenseMatrix, l: &SymPsdMatrix) -> Result<PotentialEval> {
        match self.kind {
            PotentialKind::Hyperbolic => {
                let llt = SymPsdMatrix::from_symmetrized(l.as_matrix().matmul(l.as_matrix()));
                eval_hyperbolic(s, &llt)
            }
            PotentialKind::Stochastic => eval_stochastic(s, l.as_matrix(), self),
            PotentialKind::Regularized => eval_regularized(s, l, self),
        }
    }
}

/// Value and gradient of a potential at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialEval {
    pub value: f64,
    pub gradient: DenseMatrix,
    /// Standard error of `value` (Monte Carlo families; zero otherwise).
    pub value_std_err: f64,
    /// Inner-solver iterations (regularized family; zero otherwise).
    pub iterations: usize,
}

fn check_shapes(s: &DenseMatrix, dim: usize, what: &str) -> Result<()> {
    if dim != s.rows() {
        return Err(Error::DimensionMismatch(alloc::format!("{what} is {dim}×{dim} but S has {} rows", s.rows())));
    }
    Ok(())
}

/// `tr √(S Sᵀ + LLT)`, defined for any PSD `LLT`.
pub fn hyperbolic_value(s: &DenseMatrix, llt: &SymPsdMatrix) -> f64 {
    let k = s.gram().add(llt);
    sym_eigen(&k).values.iter().map(|&l| libm::sqrt(l.max(0.0))).sum()
}

/// Hyperbolic potential: value `tr √(SSᵀ + LLT)`, gradient
/// `(SSᵀ + LLT)^{−1/2} S`.
pub fn eval_hyperbolic(s: &DenseMatrix, llt: &SymPsdMatrix) -> Result<PotentialEval> {
    check_shapes(s, llt.dim(), "LLT")?;
    let k = s.gram().add(llt);
    let e = sym_eigen(&k);
    let lmin = e.values.first().copied().unwrap_or(0.0);
    let lmax = e.values.last().copied().unwrap_or(0.0);
    if !(lmax > 0.0) || lmin <= DEFAULT_PD_TOL * lmax {
        return Err(Error::Singular(lmin));
    }
    let value = e.values.iter().map(|&l| libm::sqrt(l)).sum();
    let inv_sqrt = e.map(|l| 1.0 / libm::sqrt(l));
    Ok(PotentialEval { value, gradient: inv_sqrt.as_matrix().matmul(s), value_std_err: 0.0, iterations: 0 })
}

/// Stochastic potential by Monte Carlo: averages `‖S + L Z⁽ⁱ⁾‖_*` and
/// `polar(S + L Z⁽ⁱ⁾)` over `family.mc_samples` Gaussian draws.
///
/// A zero factor makes the perturbation vanish; the value is then `‖S‖_*`
/// and the gradient the (pseudo-)polar factor of `S`.
pub fn eval_stochastic(s: &DenseMatrix, lfactor: &DenseMatrix, family: &PotentialFamily) -> Result<PotentialEval> {
    check_shapes(s, lfactor.rows(), "L factor")?;
    if family.mc_samples == 0 {
        return Err(Error::InvalidConfig("mc_samples must be positive".into()));
    }
    if lfactor.is_zero() {
        return Ok(PotentialEval {
            value: nuclear_norm(s),
            gradient: polar_pseudo(s),
            value_std_err: 0.0,
            iterations: 0,
        });
    }
    let avg = polar_sample_average(s, lfactor, 1.0, family.mc_samples, family.rng_seed)?;
    Ok(PotentialEval {
        value: avg.mean_nuclear,
        gradient: avg.mean_polar,
        value_std_err: avg.nuclear_std / libm::sqrt(family.mc_samples as f64),
        iterations: 0,
    })
}

/// Regularized potential: solves the inner concave quadratic maximisation
/// over the unit operator-norm ball; the maximiser is the gradient.
pub fn eval_regularized(s: &DenseMatrix, l: &SymPsdMatrix, family: &PotentialFamily) -> Result<PotentialEval> {
    check_shapes(s, l.dim(), "L")?;
    let half_tr = 0.5 * l.trace();
    if l.max_eigenvalue() <= 0.0 {
        return Ok(PotentialEval {
            value: nuclear_norm(s) + half_tr,
            gradient: polar_pseudo(s),
            value_std_err: 0.0,
            iterations: 0,
        });
    }
    let (x, iterations) = regularized_argmax(s, l, &family.qp_options())?;
    let value = s.inner(&x) - 0.5 * x.inner(&l.as_matrix().matmul(&x)) + half_tr;
    Ok(PotentialEval { value, gradient: x, value_std_err: 0.0, iterations })
}

/// `argmax_{‖X‖_op≤1} ⟨S,X⟩ − ½ tr(XᵀLX)`. Returns the unconstrained
/// maximiser `L⁻¹S` directly when it is feasible.
fn regularized_argmax(s: &DenseMatrix, l: &SymPsdMatrix, opts: &QpOptions) -> Result<(DenseMatrix, usize)> {
    let start = match crate::linalg::cholesky(l) {
        Ok(chol) => {
            let free = crate::linalg::cholesky_solve(&chol, s);
            if crate::linalg::operator_norm(&free) <= 1.0 {
                return Ok((free, 0));
            }
            free
        }
        Err(_) => DenseMatrix::zeros(s.rows(), s.cols()),
    };
    let c = -s;
    let sol = minimize_on_op_ball(&c, l, None, 1.0, &start, opts)?;
    Ok((sol.x, sol.iterations))
}

/// Sample mean and (n−1)-normalised standard deviation.
pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, libm::sqrt(var))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cholesky, operator_norm, sqrt_psd};
    use crate::rng::{gaussian_matrix, stream_rng};

    fn m1(x: f64) -> DenseMatrix {
        DenseMatrix::from_diag(&[x])
    }

    #[test]
    fn hyperbolic_scalar() {
        let e = eval_hyperbolic(&m1(3.0), &SymPsdMatrix::from_diag(&[16.0])).unwrap();
        assert!((e.value - 5.0).abs() < 1e-14);
        assert!((e.gradient[(0, 0)] - 0.6).abs() < 1e-14);
    }

    #[test]
    fn hyperbolic_zero_smoothing_is_nuclear_norm() {
        let s = gaussian_matrix(&mut stream_rng(31, 0), 3, 5);
        let e = eval_hyperbolic(&s, &SymPsdMatrix::zeros(3)).unwrap();
        assert!((e.value - nuclear_norm(&s)).abs() < 1e-12);
        assert!((&e.gradient - &crate::linalg::polar_exact(&s).unwrap()).max_abs() < 1e-10);
    }

    #[test]
    fn hyperbolic_matches_eigen_oracle_and_augmented_norm() {
        let s = gaussian_matrix(&mut stream_rng(32, 0), 3, 5);
        let e = eval_hyperbolic(&s, &SymPsdMatrix::identity(3)).unwrap();
        let oracle = sqrt_psd(&s.gram().add_diag(1.0)).trace();
        assert!((e.value - oracle).abs() < 1e-9);
        assert!((e.value - nuclear_norm(&s.hcat(&DenseMatrix::identity(3)))).abs() < 1e-9);
    }

    #[test]
    fn hyperbolic_singular_gram_rejected() {
        let s = DenseMatrix::zeros(2, 3);
        assert!(matches!(eval_hyperbolic(&s, &SymPsdMatrix::zeros(2)), Err(Error::Singular(_))));
        assert_eq!(hyperbolic_value(&s, &SymPsdMatrix::zeros(2)), 0.0);
    }

    #[test]
    fn regularized_scalar_closed_forms() {
        let fam = PotentialFamily::regularized();
        let e = eval_regularized(&m1(1.0), &SymPsdMatrix::from_diag(&[2.0]), &fam).unwrap();
        assert!((e.value - 1.25).abs() < 1e-12);
        assert!((e.gradient[(0, 0)] - 0.5).abs() < 1e-12);
        let e = eval_regularized(&m1(3.0), &SymPsdMatrix::from_diag(&[2.0]), &fam).unwrap();
        assert!((e.value - 3.0).abs() < 1e-10);
        assert!((e.gradient[(0, 0)] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn regularized_zero_smoothing() {
        let s = gaussian_matrix(&mut stream_rng(33, 0), 2, 4);
        let e = eval_regularized(&s, &SymPsdMatrix::zeros(2), &PotentialFamily::regularized()).unwrap();
        assert!((e.value - nuclear_norm(&s)).abs() < 1e-12);
        assert!((&e.gradient - &crate::linalg::polar_exact(&s).unwrap()).max_abs() < 1e-10);
    }

    #[test]
    fn stochastic_zero_factor_is_exact() {
        let s = gaussian_matrix(&mut stream_rng(34, 0), 2, 5);
        let fam = PotentialFamily::stochastic(7, 1);
        let e = eval_stochastic(&s, &DenseMatrix::zeros(2, 2), &fam).unwrap();
        assert_eq!(e.value, nuclear_norm(&s));
    }

    #[test]
    fn stochastic_scalar_limits() {
        let fam = PotentialFamily::stochastic(100_000, 5);
        let e = eval_stochastic(&m1(0.0), &m1(1.0), &fam).unwrap();
        let folded = libm::sqrt(2.0 / core::f64::consts::PI);
        assert!((e.value - folded).abs() < 4.0 * e.value_std_err, "{} ± {}", e.value, e.value_std_err);
        assert!(e.gradient[(0, 0)].abs() < 3.0 / libm::sqrt(1e5) * 1.5);

        let e = eval_stochastic(&m1(1.0), &m1(1.0), &fam).unwrap();
        // E[sign(1 + z)] = 2Φ(1) − 1 = erf(1/√2).
        let target = libm::erf(core::f64::consts::FRAC_1_SQRT_2);
        let sd = libm::sqrt((1.0 - target * target) / 1e5);
        assert!((e.gradient[(0, 0)] - target).abs() < 4.0 * sd);
    }

    #[test]
    fn stochastic_is_deterministic_in_seed_and_feasible() {
        let mut rng = stream_rng(35, 0);
        let s = gaussian_matrix(&mut rng, 2, 4);
        let l = cholesky(&gaussian_matrix(&mut rng, 2, 2).gram().add_diag(1.0)).unwrap();
        let fam = PotentialFamily::stochastic(300, 9);
        let a = eval_stochastic(&s, &l, &fam).unwrap();
        let b = eval_stochastic(&s, &l, &fam).unwrap();
        assert_eq!(a, b);
        assert!(operator_norm(&a.gradient) <= 1.0 + 1e-12);
    }

    #[test]
    fn family_names_round_trip() {
        for k in PotentialKind::ALL {
            assert_eq!(PotentialKind::parse(k.name()), Some(k));
        }
        assert_eq!(PotentialKind::parse("quadratic"), None);
    }
}
