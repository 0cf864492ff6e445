//! Empirical check of the four admissibility conditions: feasibility,
//! dominance, upper stability (constant α) and smoothness (constant β).
//!
//! Each trial draws `S`, a pair `L₁ ⪯ L₂ = L₁ + P Pᵀ` and a direction `Δ`, and
//! records
//! * `‖∇Ψ(S;Lᵢ)‖_op` and `Ψ(S;Lᵢ) − ‖S‖_*`,
//! * `(Ψ(S;L₂) − Ψ(S;L₁)) / (tr L₂ − tr L₁)`,
//! * `B(S+Δ, S) / (½ tr(Δᵀ L₁⁻¹ Δ))` with `B` the Bregman divergence of
//!   `Ψ(·;L₁)`.
//!
//! Stochastic evaluations within one trial share their Gaussian draws.

use alloc::string::String;
use alloc::vec::Vec;

use super::{PotentialFamily, PotentialKind};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, nuclear_norm, operator_norm, DenseMatrix, SymPsdMatrix};
use crate::rng::{derive_seed, domain, gaussian_matrix, stream_rng, uniform};

/// Slack on feasibility and on the deterministic α, β comparisons.
pub const DETERMINISTIC_TOL: f64 = 1e-6;
/// Relative slack on the stochastic α comparison.
pub const STOCHASTIC_ALPHA_TOL: f64 = 0.05;
/// Number of standard errors tolerated on stochastic dominance.
pub const STOCHASTIC_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub family: PotentialKind,
    pub m: usize,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub feas_max: f64,
    pub dom_min: f64,
    pub alpha_hat: f64,
    pub beta_hat: f64,
    /// Trials whose gradient left the ball by more than `1e−8`.
    pub feas_violations: usize,
    /// Trials with `Ψ < ‖S‖_*` beyond tolerance (3 standard errors for the
    /// stochastic family, `1e−8` otherwise).
    pub dom_violations: usize,
}

/// A condition that the report fails against the family's constants.
#[derive(Debug, Clone, PartialEq)]
pub enum AdmissibilityViolation {
    Feasibility(f64),
    Dominance(f64),
    Stability { alpha_hat: f64, alpha: f64 },
    Smoothness { beta_hat: f64, beta: f64 },
    ProductBelowHalf(f64),
}

impl core::fmt::Display for AdmissibilityViolation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::Feasibility(x) => write!(f, "feasibility: max gradient operator norm {x}"),
            Self::Dominance(x) => write!(f, "dominance: min gap {x}"),
            Self::Stability { alpha_hat, alpha } => write!(f, "upper stability: alpha_hat {alpha_hat} > {alpha}"),
            Self::Smoothness { beta_hat, beta } => write!(f, "smoothness: beta_hat {beta_hat} > {beta}"),
            Self::ProductBelowHalf(x) => write!(f, "alpha_hat * beta_hat = {x} < 1/2"),
        }
    }
}

impl AdmissibilityReport {
    pub fn alphabeta_hat(&self) -> f64 {
        self.alpha_hat * self.beta_hat
    }

    /// Admissibility constants `(α, β)` the family is known to satisfy at this
    /// shape; `β` is `None` for the stochastic family when `n < m + 2`.
    pub fn theoretical_constants(&self) -> (f64, Option<f64>) {
        theoretical_constants(self.family, self.m, self.n)
    }

    /// Conditions violated beyond tolerance. The stochastic family is held to
    /// feasibility, 3σ dominance and `α̂ ≤ α(1 + 0.05)`; its `β̂` is reported
    /// only.
    pub fn violations(&self) -> Vec<AdmissibilityViolation> {
        let mut out = Vec::new();
        if self.feas_violations > 0 {
            out.push(AdmissibilityViolation::Feasibility(self.feas_max));
        }
        if self.dom_violations > 0 {
            out.push(AdmissibilityViolation::Dominance(self.dom_min));
        }
        let (alpha, beta) = self.theoretical_constants();
        match self.family {
            PotentialKind::Stochastic => {
                let a = alpha * (1.0 + STOCHASTIC_ALPHA_TOL);
                if !(self.alpha_hat <= a) {
                    out.push(AdmissibilityViolation::Stability { alpha_hat: self.alpha_hat, alpha: a });
                }
            }
            _ => {
                let beta = beta.unwrap_or(1.0);
                if !(self.alpha_hat <= alpha + DETERMINISTIC_TOL) {
                    out.push(AdmissibilityViolation::Stability { alpha_hat: self.alpha_hat, alpha });
                }
                if !(self.beta_hat <= beta + DETERMINISTIC_TOL) {
                    out.push(AdmissibilityViolation::Smoothness { beta_hat: self.beta_hat, beta });
                }
                if !(self.alphabeta_hat() >= 0.5 - 1e-3) {
                    out.push(AdmissibilityViolation::ProductBelowHalf(self.alphabeta_hat()));
                }
            }
        }
        out
    }

    pub fn csv_header() -> &'static str {
        "family,m,n,trials,seed,feas_max,dom_min,alpha_hat,beta_hat,alphabeta_hat"
    }

    pub fn csv_row(&self) -> String {
        alloc::format!(
            "{},{},{},{},{},{:e},{:e},{:e},{:e},{:e}",
            self.family.name(),
            self.m,
            self.n,
            self.trials,
            self.seed,
            self.feas_max,
            self.dom_min,
            self.alpha_hat,
            self.beta_hat,
            self.alphabeta_hat()
        )
    }
}

pub fn theoretical_constants(kind: PotentialKind, m: usize, n: usize) -> (f64, Option<f64>) {
    match kind {
        PotentialKind::Hyperbolic => (1.0, Some(1.0)),
        PotentialKind::Regularized => (0.5, Some(1.0)),
        PotentialKind::Stochastic => {
            let alpha = libm::sqrt(m as f64) + libm::sqrt(n as f64);
            let beta = (n >= m + 2).then(|| 1.0 / libm::sqrt((n - m - 1) as f64));
            (alpha, beta)
        }
    }
}

struct Trial {
    s: DenseMatrix,
    l1: SymPsdMatrix,
    l2: SymPsdMatrix,
    delta: DenseMatrix,
}

fn draw_trial(m: usize, n: usize, seed: u64, index: u64) -> Trial {
    let mut rng = stream_rng(derive_seed(seed, domain::ADMISSIBILITY, index), 0);
    let s = if uniform(&mut rng) < 0.1 {
        DenseMatrix::zeros(m, n)
    } else {
        gaussian_matrix(&mut rng, m, n).scale(libm::pow(10.0, -3.0 + 4.0 * uniform(&mut rng)))
    };
    let c = gaussian_matrix(&mut rng, m, m);
    let l1 = c.gram().scale(1.0 / m as f64).add_diag(0.1);
    let rank = 1 + ((uniform(&mut rng) * m as f64) as usize).min(m - 1);
    let p = gaussian_matrix(&mut rng, m, rank).scale(libm::pow(10.0, -2.0 + 2.0 * uniform(&mut rng)));
    let l2 = l1.add(&p.gram());
    let d = gaussian_matrix(&mut rng, m, n);
    let mag = libm::pow(10.0, -3.0 * uniform(&mut rng)) * l1.trace() / m as f64;
    let delta = d.scale(mag / d.frobenius_norm());
    Trial { s, l1, l2, delta }
}

/// Runs `trials` random checks of the four conditions for `family` at shape
/// `m × n`. Stochastic trials use `family.mc_samples` draws per evaluation.
pub fn check_admissibility(
    family: &PotentialFamily,
    m: usize,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<AdmissibilityReport> {
    if m == 0 || n == 0 || trials == 0 {
        return Err(Error::InvalidConfig(alloc::format!("need m, n, trials >= 1 (got {m}, {n}, {trials})")));
    }
    let mut fam = *family;
    if fam.kind == PotentialKind::Regularized {
        // Bregman ratios difference values at nearby points; tighten the
        // inner solver so its error stays well below the tolerance.
        fam.qp_tol = fam.qp_tol.min(1e-13);
    }
    let mut report = AdmissibilityReport {
        family: family.kind,
        m,
        n,
        trials,
        seed,
        feas_max: 0.0,
        dom_min: f64::INFINITY,
        alpha_hat: f64::NEG_INFINITY,
        beta_hat: f64::NEG_INFINITY,
        feas_violations: 0,
        dom_violations: 0,
    };
    for index in 0..trials as u64 {
        let trial = draw_trial(m, n, seed, index);
        fam.rng_seed = derive_seed(family.rng_seed ^ seed, domain::ADMISSIBILITY, index);
        let nuc = nuclear_norm(&trial.s);
        let e1 = fam.evaluate(&trial.s, &trial.l1)?;
        let e2 = fam.evaluate(&trial.s, &trial.l2)?;
        for e in [&e1, &e2] {
            let op = operator_norm(&e.gradient);
            report.feas_max = report.feas_max.max(op);
            if op > 1.0 + 1e-8 {
                report.feas_violations += 1;
            }
            let gap = e.value - nuc;
            report.dom_min = report.dom_min.min(gap);
            let slack = if fam.kind == PotentialKind::Stochastic {
                STOCHASTIC_SIGMAS * e.value_std_err
            } else {
                1e-8 * (1.0 + nuc)
            };
            if gap < -slack {
                report.dom_violations += 1;
            }
        }
        let dtr = trial.l2.trace() - trial.l1.trace();
        report.alpha_hat = report.alpha_hat.max((e2.value - e1.value) / dtr);

        let y = &trial.s + &trial.delta;
        let ey = fam.evaluate(&y, &trial.l1)?;
        let breg = ey.value - e1.value - e1.gradient.inner(&trial.delta);
        let chol = cholesky(&trial.l1)?;
        let quad = 0.5 * trial.delta.inner(&cholesky_solve(&chol, &trial.delta));
        report.beta_hat = report.beta_hat.max(breg / quad);
    }
    Ok(report)
}
