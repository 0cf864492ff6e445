//! Randomised invariants, with nalgebra as an independent SVD/eigen oracle.

use approx::assert_relative_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;

use matrix_olo::learners::{
    trace_potential_check, Adversary, AdversaryKind, Learner, LearnerConfig, LearnerKind, LearnerRun,
};
use matrix_olo::linalg::{
    nuclear_norm, operator_norm, polar_exact, polar_ns, singular_values, sqrt_psd, sym_eigen, DenseMatrix, SymPsdMatrix,
};
use matrix_olo::optimizers::tau_weights;
use matrix_olo::potentials::{hyperbolic_value, PotentialFamily};
use matrix_olo::rng::{gaussian_matrix, stream_rng};

fn to_na(a: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice())
}

fn shape() -> impl Strategy<Value = (usize, usize)> {
    (1usize..5, 1usize..6)
}

fn matrix(m: usize, n: usize, seed: u64) -> DenseMatrix {
    gaussian_matrix(&mut stream_rng(seed, 0), m, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn singular_values_match_nalgebra((m, n) in shape(), seed in any::<u64>()) {
        let a = matrix(m, n, seed);
        let ours = singular_values(&a);
        let mut theirs: Vec<f64> = to_na(&a).singular_values().iter().copied().collect();
        theirs.sort_by(|x, y| y.total_cmp(x));
        for (x, y) in ours.iter().zip(&theirs) {
            assert_relative_eq!(x, y, epsilon = 1e-10, max_relative = 1e-10);
        }
    }

    #[test]
    fn eigenvalues_match_nalgebra(m in 1usize..6, seed in any::<u64>()) {
        let a = matrix(m, m + 2, seed).gram();
        let ours = sym_eigen(&a).values;
        let mut theirs: Vec<f64> = to_na(a.as_matrix()).symmetric_eigen().eigenvalues.iter().copied().collect();
        theirs.sort_by(f64::total_cmp);
        for (x, y) in ours.iter().zip(&theirs) {
            assert_relative_eq!(x, y, epsilon = 1e-10, max_relative = 1e-10);
        }
    }

    #[test]
    fn polar_is_orthogonal_and_ns_agrees((m, n) in shape(), seed in any::<u64>()) {
        let a = matrix(m, n, seed);
        let p = polar_exact(&a).unwrap();
        let r = m.min(n);
        let pp = if m <= n { p.matmul_transpose(&p) } else { p.transpose_matmul(&p) };
        prop_assert!((&pp - &DenseMatrix::identity(r)).max_abs() < 1e-10);
        // ⟨A, polar(A)⟩ = ‖A‖_*.
        prop_assert!((a.inner(&p) - nuclear_norm(&a)).abs() < 1e-9 * (1.0 + nuclear_norm(&a)));
        if let Ok((q, _)) = polar_ns(&a, 200, 1e-12) {
            prop_assert!((&q - &p).frobenius_norm() < 1e-6);
        }
    }

    #[test]
    fn norm_ordering((m, n) in shape(), seed in any::<u64>()) {
        let a = matrix(m, n, seed);
        let (op, fro, nuc) = (operator_norm(&a), a.frobenius_norm(), nuclear_norm(&a));
        prop_assert!(op <= fro * (1.0 + 1e-12) && fro <= nuc * (1.0 + 1e-12));
        prop_assert!(nuc <= (m.min(n) as f64).sqrt() * fro * (1.0 + 1e-12));
    }

    #[test]
    fn hyperbolic_dominates_nuclear_and_is_feasible((m, n) in shape(), seed in any::<u64>(), shift in 0.0f64..3.0) {
        let s = matrix(m, n, seed);
        let llt = matrix(m, m, seed ^ 1).gram().add_diag(shift + 1e-3);
        prop_assert!(hyperbolic_value(&s, &llt) >= nuclear_norm(&s) - 1e-10);
        let e = PotentialFamily::hyperbolic().evaluate(&s, &sqrt_psd(&llt)).unwrap();
        prop_assert!(operator_norm(&e.gradient) <= 1.0 + 1e-10);
    }

    #[test]
    fn learners_stay_feasible(
        kind in prop::sample::select(vec![LearnerKind::Ftl, LearnerKind::Ftrl, LearnerKind::Faml, LearnerKind::Shampoo, LearnerKind::OneSidedShampoo, LearnerKind::Ftpl]),
        adv in prop::sample::select(vec![AdversaryKind::Gaussian, AdversaryKind::SignFlip, AdversaryKind::LowRankBurst]),
        (m, n) in shape(),
        d in 0.1f64..3.0,
        seed in 0u64..1000,
    ) {
        let cfg = LearnerConfig { d, mc_samples: 8, seed, ..LearnerConfig::new(kind) };
        let run = LearnerRun::on_sequence(cfg, &Adversary::new(adv, m, n, 1.0, seed).sequence(15)).unwrap();
        for x in &run.actions {
            prop_assert!(operator_norm(x) <= d * (1.0 + 1e-8), "{kind:?} {adv:?}: {}", operator_norm(x));
        }
    }

    #[test]
    fn actions_are_scale_invariant(
        kind in prop::sample::select(vec![LearnerKind::Ftl, LearnerKind::Faml, LearnerKind::Ftpl]),
        (m, n) in shape(),
        c in 0.01f64..100.0,
        seed in 0u64..1000,
    ) {
        let grads = Adversary::new(AdversaryKind::Gaussian, m, n, 1.0, seed).sequence(8);
        let scaled: Vec<DenseMatrix> = grads.iter().map(|g| g.scale(c)).collect();
        let base = LearnerConfig { mc_samples: 8, seed, eta: Some(1.3), ..LearnerConfig::new(kind) };
        let a = LearnerRun::on_sequence(base, &grads).unwrap();
        let b = LearnerRun::on_sequence(LearnerConfig { g: c, ..base }, &scaled).unwrap();
        for (x, y) in a.actions.iter().zip(&b.actions) {
            prop_assert!((x - y).max_abs() < 1e-10);
        }
    }

    #[test]
    fn unit_discount_matches_plain_sums((m, n) in shape(), seed in 0u64..1000) {
        let grads = Adversary::new(AdversaryKind::Gaussian, m, n, 1.0, seed).sequence(6);
        let mut l = Learner::new(LearnerConfig::new(LearnerKind::Faml), m, n).unwrap();
        for g in &grads {
            l.advance(g).unwrap();
        }
        let mut s = DenseMatrix::zeros(m, n);
        for g in &grads {
            s += g;
        }
        let s_int = if m > n { l.state.s.transpose() } else { l.state.s.clone() };
        prop_assert_eq!(s_int, s);
    }

    #[test]
    fn trace_potential_inequality((m, n) in shape(), t in 1usize..40, seed in any::<u64>()) {
        let grads = Adversary::new(AdversaryKind::LowRankBurst, m, n, 1.0, seed).sequence(t);
        prop_assert!(trace_potential_check(&grads).holds);
    }

    #[test]
    fn tau_weights_sum_to_one(beta in 0.01f64..0.999, horizon in 1usize..2000) {
        let w = tau_weights(beta, horizon);
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(w.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn sqrt_psd_squares_back(m in 1usize..6, seed in any::<u64>()) {
        let a: SymPsdMatrix = matrix(m, m + 1, seed).gram();
        let r = sqrt_psd(&a);
        let back = r.as_matrix().matmul(r.as_matrix());
        prop_assert!((&back - a.as_matrix()).frobenius_norm() <= 1e-9 * (1.0 + a.frobenius_norm()));
    }
}
