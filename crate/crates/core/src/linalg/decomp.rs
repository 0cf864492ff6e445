//! Reference decompositions: one-sided Jacobi SVD, cyclic Jacobi symmetric
//! eigendecomposition and Cholesky.
//!
//! Both Jacobi routines are slow compared to bidiagonal QR but reach full
//! relative accuracy on the small dense matrices used here, which is what the
//! oracle role needs.

use alloc::vec;
use alloc::vec::Vec;

use super::matrix::{dot, DenseMatrix, SymPsdMatrix};
use crate::error::{Error, Result};

const JACOBI_EPS: f64 = 1e-15;
const MAX_SWEEPS: usize = 80;

/// Thin SVD `A = U · diag(σ) · Vᵀ` with `r = min(m, n)` singular triplets.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `m × r`, orthonormal columns.
    pub u: DenseMatrix,
    /// Descending, nonnegative.
    pub singular_values: Vec<f64>,
    /// `r × n`. Rows belonging to zero singular values are zero.
    pub vt: DenseMatrix,
}

impl Svd {
    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    pub fn sigma_min(&self) -> f64 {
        self.singular_values.last().copied().unwrap_or(0.0)
    }

    /// `Σ_{i ∈ keep} w_i · u_i v_iᵀ`.
    pub fn recompose(&self, weight: impl Fn(f64) -> f64) -> DenseMatrix {
        let (m, n) = (self.u.rows(), self.vt.cols());
        let mut out = DenseMatrix::zeros(m, n);
        for (k, &s) in self.singular_values.iter().enumerate() {
            let w = weight(s);
            if w == 0.0 {
                continue;
            }
            let v = self.vt.row(k);
            for i in 0..m {
                let c = w * self.u[(i, k)];
                if c == 0.0 {
                    continue;
                }
                for (o, &vj) in out.row_mut(i).iter_mut().zip(v) {
                    *o += c * vj;
                }
            }
        }
        out
    }
}

/// Thin SVD by one-sided (Hestenes) Jacobi on the shorter dimension.
pub fn svd(a: &DenseMatrix) -> Svd {
    if a.rows() > a.cols() {
        let t = svd(&a.transpose());
        return Svd { u: t.vt.transpose(), singular_values: t.singular_values, vt: t.u.transpose() };
    }
    let (rows, q) = orthogonalize_rows(a, true);
    let q = q.expect("rotations requested");
    let m = a.rows();
    let n = a.cols();

    let mut norms: Vec<(f64, usize)> = (0..m).map(|i| (libm::sqrt(dot(rows.row(i), rows.row(i))), i)).collect();
    norms.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));

    let mut u = DenseMatrix::zeros(m, m);
    let mut vt = DenseMatrix::zeros(m, n);
    let mut singular_values = Vec::with_capacity(m);
    for (k, &(s, i)) in norms.iter().enumerate() {
        singular_values.push(s);
        // U = Qᵀ, so column k of U is row i of Q.
        for r in 0..m {
            u[(r, k)] = q[(i, r)];
        }
        if s > 0.0 {
            for (o, &b) in vt.row_mut(k).iter_mut().zip(rows.row(i)) {
                *o = b / s;
            }
        }
    }
    Svd { u, singular_values, vt }
}

/// Singular values only (descending); skips accumulation of rotations.
pub fn singular_values(a: &DenseMatrix) -> Vec<f64> {
    let owned;
    let a = if a.rows() > a.cols() {
        owned = a.transpose();
        &owned
    } else {
        a
    };
    let (rows, _) = orthogonalize_rows(a, false);
    let mut s: Vec<f64> = (0..rows.rows()).map(|i| libm::sqrt(dot(rows.row(i), rows.row(i)))).collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Applies row rotations until the rows of `a` (m ≤ n) are mutually
/// orthogonal. Returns the rotated rows and, optionally, the accumulated
/// orthogonal factor `Q` with `rows = Q · a`.
fn orthogonalize_rows(a: &DenseMatrix, accumulate: bool) -> (DenseMatrix, Option<DenseMatrix>) {
    let m = a.rows();
    let n = a.cols();
    let mut b = a.clone();
    let mut q = accumulate.then(|| DenseMatrix::identity(m));
    if m == 1 {
        return (b, q);
    }
    let mut norms: Vec<f64> = (0..m).map(|i| dot(b.row(i), b.row(i))).collect();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..m {
            for r in (p + 1)..m {
                let alpha = norms[p];
                let beta = norms[r];
                let gamma = dot(b.row(p), b.row(r));
                if gamma == 0.0 || gamma.abs() <= JACOBI_EPS * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate_rows(b.as_mut_slice(), n, p, r, c, s);
                if let Some(q) = q.as_mut() {
                    rotate_rows(q.as_mut_slice(), m, p, r, c, s);
                }
                norms[p] = dot(b.row(p), b.row(p));
                norms[r] = dot(b.row(r), b.row(r));
            }
        }
        if !rotated {
            break;
        }
    }
    (b, q)
}

#[inline]
fn rotate_rows(data: &mut [f64], width: usize, p: usize, r: usize, c: f64, s: f64) {
    debug_assert!(p < r);
    let (head, tail) = data.split_at_mut(r * width);
    let rp = &mut head[p * width..(p + 1) * width];
    let rr = &mut tail[..width];
    for (x, y) in rp.iter_mut().zip(rr.iter_mut()) {
        let (bp, bq) = (*x, *y);
        *x = c * bp - s * bq;
        *y = s * bp + c * bq;
    }
}

/// Symmetric eigendecomposition `A = V · diag(λ) · Vᵀ`, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns.
    pub vectors: DenseMatrix,
}

impl SymEigen {
    /// `V · diag(f(λ)) · Vᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymPsdMatrix {
        let n = self.values.len();
        let fl: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let v = &self.vectors;
        let mut out = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += v[(i, k)] * fl[k] * v[(j, k)];
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc;
            }
        }
        SymPsdMatrix::from_symmetrized(out)
    }
}

/// Cyclic two-sided Jacobi eigendecomposition.
pub fn sym_eigen(a: &SymPsdMatrix) -> SymEigen {
    let n = a.dim();
    let mut m = a.as_matrix().clone();
    let mut v = DenseMatrix::identity(n);
    let scale = m.frobenius_norm();
    if n > 1 && scale > 0.0 {
        let floor = scale * 1e-300;
        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m[(p, q)];
                    let app = m[(p, p)];
                    let aqq = m[(q, q)];
                    if apq.abs() <= floor || apq.abs() <= JACOBI_EPS * libm::sqrt((app * aqq).abs()) {
                        continue;
                    }
                    // Below this the rotation is numerically the identity.
                    if apq.abs() <= f64::EPSILON * 1e-3 * scale {
                        m[(p, q)] = 0.0;
                        m[(q, p)] = 0.0;
                        continue;
                    }
                    rotated = true;
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                    let c = 1.0 / libm::sqrt(t * t + 1.0);
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (m[(k, p)], m[(k, q)]);
                        m[(k, p)] = c * akp - s * akq;
                        m[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (m[(p, k)], m[(q, k)]);
                        m[(p, k)] = c * apk - s * aqk;
                        m[(q, k)] = s * apk + c * aqk;
                    }
                    m[(p, q)] = 0.0;
                    m[(q, p)] = 0.0;
                    for k in 0..n {
                        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    SymEigen { values, vectors }
}

/// Lower-triangular `L` with `L Lᵀ = A`.
pub fn cholesky(a: &SymPsdMatrix) -> Result<DenseMatrix> {
    let n = a.dim();
    let a = a.as_matrix();
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        let d = libm::sqrt(d);
        l[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Ok(DenseMatrix::from_raw(n, n, l))
}

/// Solves `L Lᵀ x = b` column-wise for a Cholesky factor `L`.
pub fn cholesky_solve(l: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let n = l.rows();
    assert_eq!(b.rows(), n, "cholesky_solve: dimension mismatch");
    let mut x = b.clone();
    for c in 0..b.cols() {
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in (i + 1)..n {
                s -= l[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian_matrix, stream_rng};

    fn reconstruct(s: &Svd) -> DenseMatrix {
        s.recompose(|x| x)
    }

    #[test]
    fn svd_reconstructs_wide_and_tall() {
        let mut rng = stream_rng(7, 0);
        for &(m, n) in &[(1, 1), (1, 5), (3, 3), (4, 7), (7, 4), (13, 8)] {
            let a = gaussian_matrix(&mut rng, m, n);
            let s = svd(&a);
            assert!((&reconstruct(&s) - &a).frobenius_norm() < 1e-12 * (1.0 + a.frobenius_norm()));
            let r = m.min(n);
            let utu = s.u.transpose_matmul(&s.u);
            assert!((&utu - &DenseMatrix::identity(r)).frobenius_norm() < 1e-12);
            let vvt = s.vt.matmul_transpose(&s.vt);
            assert!((&vvt - &DenseMatrix::identity(r)).frobenius_norm() < 1e-12);
            assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
            let only = singular_values(&a);
            for (x, y) in only.iter().zip(&s.singular_values) {
                assert!((x - y).abs() < 1e-12 * (1.0 + y));
            }
        }
    }

    #[test]
    fn svd_of_rank_deficient_matrix() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]]).unwrap();
        let s = svd(&a);
        assert!(s.sigma_min() < 1e-14);
        assert!((s.sigma_max() - 14f64.sqrt() * 5f64.sqrt()).abs() < 1e-12);
        assert!((&reconstruct(&s) - &a).frobenius_norm() < 1e-12);
    }

    #[test]
    fn eigen_reconstructs() {
        let mut rng = stream_rng(3, 1);
        for n in [1, 2, 5, 10, 20] {
            let b = gaussian_matrix(&mut rng, n, n);
            let a = SymPsdMatrix::from_symmetrized(&b + &b.transpose());
            let e = sym_eigen(&a);
            let back = e.map(|x| x);
            assert!((back.as_matrix() - a.as_matrix()).frobenius_norm() < 1e-12 * (1.0 + a.frobenius_norm()));
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn cholesky_examples() {
        let a = SymPsdMatrix::new(DenseMatrix::from_rows(&[&[4.0, 2.0], &[2.0, 5.0]]).unwrap()).unwrap();
        let l = cholesky(&a).unwrap();
        assert_eq!(l, DenseMatrix::from_rows(&[&[2.0, 0.0], &[1.0, 2.0]]).unwrap());
        assert_eq!(cholesky(&SymPsdMatrix::identity(3)).unwrap(), DenseMatrix::identity(3));
        let bad = SymPsdMatrix::from_diag(&[1.0, 0.0]);
        assert_eq!(cholesky(&bad), Err(Error::NotPositiveDefinite));
        let indefinite = SymPsdMatrix::from_diag(&[1.0, -2.0]);
        assert_eq!(cholesky(&indefinite), Err(Error::NotPositiveDefinite));
    }

    #[test]
    fn cholesky_solve_inverts() {
        let mut rng = stream_rng(11, 0);
        let b = gaussian_matrix(&mut rng, 5, 5);
        let a = b.gram().add_diag(1.0);
        let l = cholesky(&a).unwrap();
        let rhs = gaussian_matrix(&mut rng, 5, 3);
        let x = cholesky_solve(&l, &rhs);
        assert!((&a.as_matrix().matmul(&x) - &rhs).frobenius_norm() < 1e-12);
    }
}
