//! Quadratic programs over the operator-norm ball.
//!
//! Minimises `q(X) = ⟨C, X⟩ + ½⟨X, A X B⟩` subject to `‖X‖_op ≤ r` for PSD
//! `A` (m×m) and `B` (n×n, identity when absent). Accelerated projected
//! gradient with step `1/(λ_max(A) λ_max(B))`, projection by singular-value
//! clipping and gradient-based momentum restarts.

use crate::error::{Error, Result};
use crate::linalg::{polar_pseudo, project_operator_ball, DenseMatrix, SymPsdMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpOptions {
    /// Stop when `‖X − Π(X − step·∇q(X))‖_F ≤ tol · max(1, ‖C‖_F)`.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iters: 10_000 }
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DenseMatrix,
    pub iterations: usize,
    pub residual: f64,
}

fn quad_term(x: &DenseMatrix, a: &SymPsdMatrix, b: Option<&SymPsdMatrix>) -> DenseMatrix {
    let ax = a.as_matrix().matmul(x);
    match b {
        Some(b) => ax.matmul(b.as_matrix()),
        None => ax,
    }
}

/// Value of `⟨C, X⟩ + ½⟨X, A X B⟩`.
pub fn qp_objective(c: &DenseMatrix, a: &SymPsdMatrix, b: Option<&SymPsdMatrix>, x: &DenseMatrix) -> f64 {
    c.inner(x) + 0.5 * x.inner(&quad_term(x, a, b))
}

pub fn minimize_on_op_ball(
    c: &DenseMatrix,
    a: &SymPsdMatrix,
    b: Option<&SymPsdMatrix>,
    radius: f64,
    start: &DenseMatrix,
    opts: &QpOptions,
) -> Result<QpSolution> {
    let lip = a.max_eigenvalue().max(0.0) * b.map_or(1.0, |b| b.max_eigenvalue().max(0.0));
    if lip == 0.0 {
        return Ok(QpSolution { x: polar_pseudo(c).scale(-radius), iterations: 0, residual: 0.0 });
    }
    let step = 1.0 / lip;
    let threshold = opts.tol * c.frobenius_norm().max(1.0);
    let grad = |x: &DenseMatrix| {
        let mut g = quad_term(x, a, b);
        g += c;
        g
    };
    let prox = |y: &DenseMatrix| {
        let mut z = y.clone();
        z.axpy(-step, &grad(y));
        project_operator_ball(&z, radius).0
    };

    let mut x = project_operator_ball(start, radius).0;
    let mut x_prev = x.clone();
    let mut t = 1.0_f64;
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iters {
        let t_next = 0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * t * t));
        let mut y = x.clone();
        y.axpy((t - 1.0) / t_next, &(&x - &x_prev));
        let z = prox(&y);
        let step_res = (&z - &y).frobenius_norm();
        if step_res <= threshold {
            residual = (&z - &prox(&z)).frobenius_norm();
            if residual <= threshold {
                return Ok(QpSolution { x: z, iterations: it, residual });
            }
        } else {
            residual = step_res;
        }
        // Restart momentum when it points uphill.
        if (&y - &z).inner(&(&z - &x)) > 0.0 {
            t = 1.0;
        } else {
            t = t_next;
        }
        x_prev = x;
        x = z;
    }
    Err(Error::QpNotConverged { residual, iterations: opts.max_iters })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::operator_norm;
    use crate::rng::{gaussian_matrix, stream_rng};

    #[test]
    fn scalar_interior_and_clipped() {
        let a = SymPsdMatrix::from_diag(&[2.0]);
        let start = DenseMatrix::zeros(1, 1);
        let c = DenseMatrix::from_diag(&[-1.0]);
        let s = minimize_on_op_ball(&c, &a, None, 1.0, &start, &QpOptions::default()).unwrap();
        assert!((s.x[(0, 0)] - 0.5).abs() < 1e-12);
        let c = DenseMatrix::from_diag(&[-3.0]);
        let s = minimize_on_op_ball(&c, &a, None, 1.0, &start, &QpOptions::default()).unwrap();
        assert!((s.x[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_quadratic_is_linear_minimisation() {
        let c = DenseMatrix::from_diag(&[2.0, -1.0]);
        let s = minimize_on_op_ball(
            &c,
            &SymPsdMatrix::zeros(2),
            None,
            3.0,
            &DenseMatrix::zeros(2, 2),
            &QpOptions::default(),
        )
        .unwrap();
        assert!((&s.x - &DenseMatrix::from_diag(&[-3.0, 3.0])).max_abs() < 1e-12);
    }

    #[test]
    fn solution_beats_random_feasible_points() {
        let mut rng = stream_rng(21, 0);
        let c = gaussian_matrix(&mut rng, 3, 4).scale(4.0);
        let a = gaussian_matrix(&mut rng, 3, 3).gram().add_diag(0.2);
        let b = gaussian_matrix(&mut rng, 4, 4).gram().add_diag(0.2);
        let s = minimize_on_op_ball(&c, &a, Some(&b), 1.0, &DenseMatrix::zeros(3, 4), &QpOptions::default()).unwrap();
        assert!(operator_norm(&s.x) <= 1.0 + 1e-12);
        let best = qp_objective(&c, &a, Some(&b), &s.x);
        for _ in 0..200 {
            let p = project_operator_ball(&(&s.x + &gaussian_matrix(&mut rng, 3, 4).scale(0.05)), 1.0).0;
            assert!(qp_objective(&c, &a, Some(&b), &p) >= best - 1e-12);
        }
    }

    #[test]
    fn reports_non_convergence() {
        let mut rng = stream_rng(22, 0);
        let c = gaussian_matrix(&mut rng, 3, 3).scale(5.0);
        let a = gaussian_matrix(&mut rng, 3, 3).gram().add_diag(0.01);
        let opts = QpOptions { tol: 1e-15, max_iters: 2 };
        assert!(matches!(
            minimize_on_op_ball(&c, &a, None, 1.0, &DenseMatrix::zeros(3, 3), &opts),
            Err(Error::QpNotConverged { iterations: 2, .. })
        ));
    }
}
