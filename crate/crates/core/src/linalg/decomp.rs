use alloc::vec::Vec;

use super::{LinalgError, Matrix};
use crate::math;

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, same order as `values`.
    pub vectors: Matrix,
}

impl SymEigen {
    /// Rebuilds `V diag(f(λ)) Vᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.values.len();
        let v = &self.vectors;
        let fl: Vec<f64> = self.values.iter().map(|l| f(*l)).collect();
        Matrix::from_fn(n, n, |i, j| (0..n).map(|k| v[(i, k)] * fl[k] * v[(j, k)]).sum())
    }
}

/// Cyclic Jacobi eigen-decomposition. Only the upper triangle's symmetric
/// part matters; the input is symmetrized first.
pub fn sym_eigen(a: &Matrix) -> Result<SymEigen, LinalgError> {
    a.ensure_square()?;
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = a.rows();
    let mut m = Matrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let mut v = Matrix::identity(n);

    let mut converged = n <= 1;
    for sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if off == 0.0 || off < 1e-300 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let g = 100.0 * math::abs(apq);
                if sweep > 3 && math::abs(app) + g == math::abs(app) && math::abs(aqq) + g == math::abs(aqq)
                {
                    m[(p, q)] = 0.0;
                    m[(q, p)] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if math::abs(theta) > 1e150 {
                    0.5 / theta
                } else {
                    math::signum(theta) / (math::abs(theta) + math::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / math::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = c * akp - s * akq;
                    m[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = c * apk - s * aqk;
                    m[(q, k)] = s * apk + c * aqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    Ok(SymEigen { values, vectors })
}

/// Thin singular value decomposition `A = U diag(s) Vᵀ`.
///
/// `V` is always a full `n×n` orthogonal matrix; `U` is `m×n` and has zero
/// columns where the singular value vanishes. Values are sorted descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

/// One-sided Jacobi SVD.
pub fn svd(a: &Matrix) -> Result<Svd, LinalgError> {
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let (m, n) = a.shape();
    // Work on columns stored contiguously.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.col(j)).collect();
    let mut v = Matrix::identity(n);
    let floor = {
        let f = a.frobenius_norm();
        1e-30 * f * f
    };
    let mut converged = n <= 1;
    for _ in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let cp = &cols[p];
                    let cq = &cols[q];
                    let mut al = 0.0;
                    let mut be = 0.0;
                    let mut ga = 0.0;
                    for k in 0..m {
                        al += cp[k] * cp[k];
                        be += cq[k] * cq[k];
                        ga += cp[k] * cq[k];
                    }
                    (al, be, ga)
                };
                if gamma == 0.0
                    || math::abs(gamma) <= 1e-15 * math::sqrt(alpha * beta)
                    || alpha.min(beta) <= floor
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if math::abs(zeta) > 1e150 {
                    0.5 / zeta
                } else {
                    math::signum(zeta) / (math::abs(zeta) + math::sqrt(1.0 + zeta * zeta))
                };
                let c = 1.0 / math::sqrt(1.0 + t * t);
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                let cp = &mut left[p];
                let cq = &mut right[0];
                for k in 0..m {
                    let up = cp[k];
                    let uq = cq[k];
                    cp[k] = c * up - s * uq;
                    cq[k] = s * up + c * uq;
                }
                for k in 0..n {
                    let vp = v[(k, p)];
                    let vq = v[(k, q)];
                    v[(k, p)] = c * vp - s * vq;
                    v[(k, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence);
    }
    let sig: Vec<f64> = cols.iter().map(|c| super::norm2(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sig[j].total_cmp(&sig[i]));
    let mut u = Matrix::zeros(m, n);
    let mut vs = Matrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        let sj = sig[j];
        s.push(sj);
        if sj > 0.0 {
            for i in 0..m {
                u[(i, k)] = cols[j][i] / sj;
            }
        }
        for i in 0..n {
            vs[(i, k)] = v[(i, j)];
        }
    }
    Ok(Svd { u, s, v: vs })
}

/// Orthonormal basis of the right null space of `a`, as columns.
///
/// Singular values at or below `1e-10·σ_max` count as zero. Returns an
/// `n×0` matrix when the null space is trivial.
pub fn null_basis(a: &Matrix) -> Result<Matrix, LinalgError> {
    let n = a.cols();
    if a.rows() == 0 {
        return Ok(Matrix::identity(n));
    }
    let d = svd(a)?;
    let smax = d.s.first().copied().unwrap_or(0.0);
    let tol = 1e-10 * smax;
    let idx: Vec<usize> = (0..n).filter(|&k| smax == 0.0 || d.s[k] <= tol).collect();
    Ok(Matrix::from_fn(n, idx.len(), |i, k| d.v[(i, idx[k])]))
}

/// Square root of a symmetric positive semidefinite matrix.
///
/// Eigenvalues below `−1e-10·max(1, λ_max)` are rejected; smaller negative
/// round-off is clamped to zero.
pub fn sqrtm_psd(a: &Matrix) -> Result<Matrix, LinalgError> {
    let e = sym_eigen(a)?;
    let top = e.values.last().copied().unwrap_or(0.0);
    if e.values.first().copied().unwrap_or(0.0) < -1e-10 * top.max(1.0) {
        return Err(LinalgError::NotPositiveDefinite);
    }
    Ok(e.map(|l| math::sqrt(l.max(0.0))))
}

/// Cholesky factor `L` (lower triangular) with `A = L Lᵀ`.
pub fn cholesky(a: &Matrix) -> Result<Matrix, LinalgError> {
    a.ensure_square()?;
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(LinalgError::NotPositiveDefinite);
        }
        let d = math::sqrt(d);
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
    sign: f64,
}

fn lu_factor(a: &Matrix) -> Result<Lu, LinalgError> {
    a.ensure_square()?;
    let n = a.rows();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for k in 0..n {
        let mut piv = k;
        let mut best = math::abs(lu[(k, k)]);
        for i in (k + 1)..n {
            let v = math::abs(lu[(i, k)]);
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best <= 1e-14 * scale {
            return Err(LinalgError::Singular);
        }
        if piv != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = t;
            }
            perm.swap(k, piv);
            sign = -sign;
        }
        let pivot = lu[(k, k)];
        for i in (k + 1)..n {
            let f = lu[(i, k)] / pivot;
            lu[(i, k)] = f;
            if f != 0.0 {
                for j in (k + 1)..n {
                    let v = lu[(k, j)];
                    lu[(i, j)] -= f * v;
                }
            }
        }
    }
    Ok(Lu { lu, perm, sign })
}

impl Lu {
    fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.lu[(i, k)] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                x[i] -= self.lu[(i, k)] * x[k];
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }
}

/// Solves `A X = B` with partial pivoting.
pub fn lu_solve(a: &Matrix, b: &Matrix) -> Result<Matrix, LinalgError> {
    if b.rows() != a.rows() {
        return Err(LinalgError::DimensionMismatch { expected: (a.rows(), b.cols()), found: b.shape() });
    }
    let f = lu_factor(a)?;
    let mut out = Matrix::zeros(b.rows(), b.cols());
    for j in 0..b.cols() {
        let x = f.solve_vec(&b.col(j));
        for (i, v) in x.into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    if !out.is_finite() {
        return Err(LinalgError::Singular);
    }
    Ok(out)
}

pub fn inverse(a: &Matrix) -> Result<Matrix, LinalgError> {
    lu_solve(a, &Matrix::identity(a.rows()))
}

pub fn determinant(a: &Matrix) -> Result<f64, LinalgError> {
    match lu_factor(a) {
        Ok(f) => Ok(f.sign * f.lu.diag().iter().product::<f64>()),
        Err(LinalgError::Singular) => Ok(0.0),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sym_eigen_reconstructs() {
        let a = Matrix::from_rows(&[[4.0, 1.0, -2.0], [1.0, 3.0, 0.5], [-2.0, 0.5, -1.0]]);
        let e = sym_eigen(&a).unwrap();
        assert!(e.map(|l| l).approx_eq(&a, 1e-12));
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let vtv = e.vectors.tr_matmul(&e.vectors);
        assert!(vtv.approx_eq(&Matrix::identity(3), 1e-12));
    }

    #[test]
    fn svd_reconstructs_wide_and_tall() {
        for a in [
            Matrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]),
            Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 7.0]]),
        ] {
            let d = svd(&a).unwrap();
            let us = Matrix::from_fn(a.rows(), a.cols(), |i, k| d.u[(i, k)] * d.s[k]);
            let rec = us.matmul(&d.v.transpose());
            assert!(rec.approx_eq(&a, 1e-12), "{:?}", rec);
        }
    }

    #[test]
    fn null_basis_of_rank_one() {
        let a = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]);
        let nb = null_basis(&a).unwrap();
        assert_eq!(nb.shape(), (2, 1));
        let r = 1.0 / math::sqrt(2.0);
        let s = math::signum(nb[(0, 0)]);
        assert!(math::abs(nb[(0, 0)] - s * r) < 1e-12);
        assert!(math::abs(nb[(1, 0)] + s * r) < 1e-12);
    }

    #[test]
    fn null_basis_of_full_rank_is_empty() {
        let nb = null_basis(&Matrix::identity(3)).unwrap();
        assert_eq!(nb.shape(), (3, 0));
    }

    #[test]
    fn sqrtm_of_diagonal() {
        let s = sqrtm_psd(&Matrix::from_diag(&[4.0, 9.0])).unwrap();
        assert!(s.approx_eq(&Matrix::from_diag(&[2.0, 3.0]), 1e-14));
    }

    #[test]
    fn sqrtm_rejects_indefinite() {
        assert!(sqrtm_psd(&Matrix::from_diag(&[1.0, -1.0])).is_err());
    }

    #[test]
    fn inverse_and_det() {
        let a = Matrix::from_rows(&[[0.0, 2.0], [1.0, 1.0]]);
        let ai = inverse(&a).unwrap();
        assert!(a.matmul(&ai).approx_eq(&Matrix::identity(2), 1e-14));
        assert!(math::abs(determinant(&a).unwrap() + 2.0) < 1e-14);
        assert_eq!(inverse(&Matrix::zeros(2, 2)), Err(LinalgError::Singular));
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let l = cholesky(&Matrix::from_rows(&[[4.0, 2.0], [2.0, 3.0]])).unwrap();
        assert!(l.matmul(&l.transpose()).approx_eq(&Matrix::from_rows(&[[4.0, 2.0], [2.0, 3.0]]), 1e-14));
        assert!(cholesky(&Matrix::from_diag(&[1.0, 0.0])).is_err());
    }
}
