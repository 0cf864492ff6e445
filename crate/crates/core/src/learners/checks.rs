//! Numerical checks of the regret decomposition and the trace-potential
//! inequality along a concrete gradient sequence.

use alloc::vec::Vec;

use super::learner::{regret_of_run, run_on_sequence};
use super::{LearnerConfig, LearnerKind};
use crate::error::{Error, Result};
use crate::linalg::{nuclear_norm, psd_power, sqrt_psd, trace_power, DenseMatrix, SymPsdMatrix};
use crate::potentials::{eval_hyperbolic, eval_regularized, PotentialEval, PotentialFamily};

/// Both sides of the GBPA regret identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbpaCheck {
    /// Regret of the learner's run.
    pub lhs: f64,
    /// Underestimation + Bregman sum + stability sum + first-round term.
    pub rhs: f64,
    pub residual: f64,
    pub underestimation: f64,
    pub bregman: f64,
    pub stability: f64,
    pub first: f64,
}

/// Runs `config` (faml or ftrl, undiscounted) on `grads` and compares its
/// regret with
///
/// `D(‖S_T‖_* − Φ̃_T(S_T)) + D Σ_{t<T} B_{Φ̃_t}(S_{t+1}, S_t)
///  + D Σ_{t<T} (Φ̃_{t+1} − Φ̃_t)(S_{t+1}) + D Φ̃_1(G_1)`,
///
/// where `Φ̃_t` is the learner's potential with preconditioner built from
/// `M_t`. The right side uses fresh potential evaluations only.
pub fn gbpa_decomposition_check(config: LearnerConfig, grads: &[DenseMatrix]) -> Result<GbpaCheck> {
    if !matches!(config.kind, LearnerKind::Faml | LearnerKind::Ftrl) {
        return Err(Error::InvalidConfig("decomposition check needs a deterministic potential (faml or ftrl)".into()));
    }
    if config.discount != 1.0 {
        return Err(Error::InvalidConfig("decomposition check needs discount = 1".into()));
    }
    let run = run_on_sequence(config, grads)?;
    let d = config.d;
    let lhs = regret_of_run(&run.records, d);

    let (m, n) = grads[0].shape();
    let transposed = m > n;
    let eta = config.eta_for(m.min(n), m.max(n));
    let g = config.g;
    let mut fam = PotentialFamily::regularized();
    fam.qp_tol = config.qp.tol;
    fam.qp_max_iters = config.qp.max_iters;

    let r = m.min(n);
    let c = m.max(n);
    let mut s = DenseMatrix::zeros(r, c);
    let mut mm = SymPsdMatrix::zeros(r);
    let mut sums = Vec::with_capacity(grads.len());
    let mut moments = Vec::with_capacity(grads.len());
    for gt in grads {
        let gt = if transposed { gt.transpose() } else { gt.clone() };
        s += &gt;
        mm.decay_and_add_gram(1.0, &gt);
        sums.push(s.clone());
        moments.push(mm.clone());
    }

    let phi = |t: usize, x: &DenseMatrix| -> Result<PotentialEval> {
        let gram = moments[t].add_diag(g * g);
        match config.kind {
            LearnerKind::Faml => eval_hyperbolic(x, &gram.scale(1.0 / (eta * eta))),
            _ => eval_regularized(x, &sqrt_psd(&gram).scale(1.0 / eta), &fam),
        }
    };

    let big_t = grads.len();
    let last = phi(big_t - 1, &sums[big_t - 1])?;
    let underestimation = d * (nuclear_norm(&sums[big_t - 1]) - last.value);
    let first = d * phi(0, &sums[0])?.value;
    let (mut bregman, mut stability) = (0.0, 0.0);
    for t in 0..big_t.saturating_sub(1) {
        let at_st = phi(t, &sums[t])?;
        let at_next = phi(t, &sums[t + 1])?;
        let diff = &sums[t + 1] - &sums[t];
        bregman += at_next.value - at_st.value - at_st.gradient.inner(&diff);
        stability += phi(t + 1, &sums[t + 1])?.value - at_next.value;
    }
    bregman *= d;
    stability *= d;
    let rhs = underestimation + bregman + stability + first;
    Ok(GbpaCheck { lhs, rhs, residual: (lhs - rhs).abs(), underestimation, bregman, stability, first })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePotentialCheck {
    /// `Σ_t tr(G_tᵀ M_t^{−1/2} G_t)`.
    pub lhs: f64,
    /// `2 tr √M_T`.
    pub rhs: f64,
    /// Ridge added to every `M_t` (0 when all are PD).
    pub ridge: f64,
    pub holds: bool,
}

/// `Σ_t tr(G_tᵀ M_t^{−1/2} G_t) ≤ 2 tr √M_T` with `M_t = Σ_{s≤t} G_s G_sᵀ`.
/// When some `M_t` is singular the same ridge `εI` is added to all of them,
/// which leaves the inequality valid.
pub fn trace_potential_check(grads: &[DenseMatrix]) -> TracePotentialCheck {
    let Some(first) = grads.first() else {
        return TracePotentialCheck { lhs: 0.0, rhs: 0.0, ridge: 0.0, holds: true };
    };
    let dim = first.rows();
    let mut moments = Vec::with_capacity(grads.len());
    let mut mm = SymPsdMatrix::zeros(dim);
    for g in grads {
        mm.decay_and_add_gram(1.0, g);
        moments.push(mm.clone());
    }
    let scale = 1.0 + mm.trace() / dim as f64;
    let singular = moments.iter().any(|m| m.min_eigenvalue() <= 1e-12 * (1.0 + m.max_eigenvalue()));
    let ridge = if singular { 1e-10 * scale } else { 0.0 };
    let mut lhs = 0.0;
    for (g, m) in grads.iter().zip(&moments) {
        let p = psd_power(&m.add_diag(ridge), -0.5);
        lhs += g.inner(&p.as_matrix().matmul(g));
    }
    let rhs = 2.0 * trace_power(&mm.add_diag(ridge), 0.5);
    TracePotentialCheck { lhs, rhs, ridge, holds: lhs <= rhs + 1e-8 * scale }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{Adversary, AdversaryKind};
    use crate::rng::{gaussian_matrix, stream_rng};

    #[test]
    fn decomposition_single_round_is_tight() {
        let g = gaussian_matrix(&mut stream_rng(71, 0), 2, 3);
        let chk = gbpa_decomposition_check(LearnerConfig::new(LearnerKind::Faml), &[g]).unwrap();
        assert!(chk.residual < 1e-10, "{chk:?}");
    }

    #[test]
    fn decomposition_faml_random_run() {
        let adv = Adversary::new(AdversaryKind::Gaussian, 3, 5, 1.0, 9);
        let chk = gbpa_decomposition_check(LearnerConfig::new(LearnerKind::Faml), &adv.sequence(20)).unwrap();
        assert!(chk.residual <= 1e-6 * (1.0 + chk.lhs.abs()), "{chk:?}");
        assert!(chk.bregman >= -1e-9 && chk.stability >= -1e-9);
    }

    #[test]
    fn decomposition_ftrl_run() {
        let adv = Adversary::new(AdversaryKind::Gaussian, 2, 3, 1.0, 10);
        let chk = gbpa_decomposition_check(LearnerConfig::new(LearnerKind::Ftrl), &adv.sequence(10)).unwrap();
        assert!(chk.residual <= 1e-5, "{chk:?}");
    }

    #[test]
    fn decomposition_rejects_stochastic() {
        let g = DenseMatrix::identity(2);
        assert!(gbpa_decomposition_check(LearnerConfig::new(LearnerKind::Ftpl), &[g]).is_err());
    }

    #[test]
    fn trace_potential_single_full_rank() {
        let g = gaussian_matrix(&mut stream_rng(72, 0), 2, 4);
        let chk = trace_potential_check(core::slice::from_ref(&g));
        let nuc = nuclear_norm(&g);
        assert!((chk.lhs - nuc).abs() < 1e-9 && (chk.rhs - 2.0 * nuc).abs() < 1e-9 && chk.holds);
    }

    #[test]
    fn trace_potential_random_and_rank_one() {
        let grads = Adversary::new(AdversaryKind::Gaussian, 4, 7, 1.0, 11).sequence(100);
        assert!(trace_potential_check(&grads).holds);
        let u = gaussian_matrix(&mut stream_rng(73, 0), 3, 1);
        let v = gaussian_matrix(&mut stream_rng(73, 1), 4, 1);
        let rank1 = alloc::vec![u.matmul_transpose(&v); 50];
        let chk = trace_potential_check(&rank1);
        assert!(chk.holds && chk.ridge > 0.0, "{chk:?}");
    }
}
