//! Preconditioned online gradient descent over the operator-norm ball:
//!
//! `X_{t+1} = argmin_{‖X‖_op≤D} ⟨G_t, X − X_t⟩ + (2η)⁻¹ tr((X−X_t)ᵀ L (X−X_t) R)`
//!
//! with `L = M^{1/4}, R = N^{1/4}` (full) or `L = M^{1/2}, R = I` (one-sided).

use crate::error::Result;
use crate::linalg::{operator_norm, psd_power, DenseMatrix, SymPsdMatrix};
use crate::potentials::{minimize_on_op_ball, QpOptions};

use super::directions::Direction;

/// Ridge added to `M` and `N` before taking fractional powers.
pub const SHAMPOO_RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShampooVariant {
    Full,
    OneSided,
}

/// One Shampoo step from `x` given the current gradient and accumulated
/// `M = Σ G Gᵀ` (and `N = Σ Gᵀ G` for the full variant).
#[allow(clippy::too_many_arguments)]
pub fn shampoo_step(
    variant: ShampooVariant,
    x: &DenseMatrix,
    g: &DenseMatrix,
    m: &SymPsdMatrix,
    n: Option<&SymPsdMatrix>,
    d: f64,
    eta: f64,
    qp: &QpOptions,
) -> Result<Direction> {
    let (l, r) = match variant {
        ShampooVariant::OneSided => (psd_power(&m.add_diag(SHAMPOO_RIDGE), 0.5), None),
        ShampooVariant::Full => {
            let n = n.cloned().unwrap_or_else(|| g.gram_cols());
            (psd_power(&m.add_diag(SHAMPOO_RIDGE), 0.25), Some(psd_power(&n.add_diag(SHAMPOO_RIDGE), 0.25)))
        }
    };
    // Unconstrained minimiser X − η L⁻¹ G R⁻¹.
    let l_inv = psd_power_inverse(&l);
    let mut step = l_inv.matmul(g);
    if let Some(r) = &r {
        step = step.matmul(&psd_power_inverse(r));
    }
    let mut free = x.clone();
    free.axpy(-eta, &step);
    if operator_norm(&free) <= d {
        return Ok(Direction { x: free, iterations: 0 });
    }
    let a = l.scale(1.0 / eta);
    let mut lxr = l.as_matrix().matmul(x);
    if let Some(r) = &r {
        lxr = lxr.matmul(r.as_matrix());
    }
    let mut c = g.clone();
    c.axpy(-1.0 / eta, &lxr);
    let sol = minimize_on_op_ball(&c, &a, r.as_ref(), d, &free, qp)?;
    Ok(Direction { x: sol.x, iterations: sol.iterations })
}

fn psd_power_inverse(p: &SymPsdMatrix) -> DenseMatrix {
    psd_power(p, -1.0).into_matrix()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::psd_power;
    use crate::rng::{gaussian_matrix, stream_rng};

    #[test]
    fn interior_step_is_preconditioned_gradient() {
        let mut rng = stream_rng(51, 0);
        let g = gaussian_matrix(&mut rng, 2, 3).scale(0.01);
        let m = gaussian_matrix(&mut rng, 2, 4).gram();
        let x = DenseMatrix::zeros(2, 3);
        let out = shampoo_step(ShampooVariant::OneSided, &x, &g, &m, None, 10.0, 0.5, &QpOptions::default()).unwrap();
        let l = psd_power(&m.add_diag(SHAMPOO_RIDGE), 0.5);
        // L (X − X_t) = −η G.
        let back = l.as_matrix().matmul(&out.x).scale(-1.0 / 0.5);
        assert!((&back - &g).max_abs() < 1e-10);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn large_gradient_is_clipped_to_ball() {
        let x = DenseMatrix::from_diag(&[0.9]);
        let g = DenseMatrix::from_diag(&[-50.0]);
        let m = SymPsdMatrix::from_diag(&[1.0]);
        for v in [ShampooVariant::OneSided, ShampooVariant::Full] {
            let out = shampoo_step(v, &x, &g, &m, Some(&m), 1.0, 1.0, &QpOptions::default()).unwrap();
            assert!((out.x[(0, 0)] - 1.0).abs() < 1e-10);
        }
    }
}
