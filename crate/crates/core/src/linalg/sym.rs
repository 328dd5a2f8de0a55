use alloc::vec::Vec;
use core::ops::Deref;

use super::{LinalgError, Matrix};
use crate::math;

/// Square matrix that has been symmetrized as `(A + Aᵀ)/2`.
///
/// The input's largest asymmetric entry is kept so callers can report it.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    inner: Matrix,
    defect: f64,
}

impl SymMatrix {
    pub fn new(a: Matrix) -> Result<Self, LinalgError> {
        a.ensure_square()?;
        let defect = a.asymmetry();
        let n = a.rows();
        let inner = Matrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
        Ok(Self { inner, defect })
    }

    pub fn identity(n: usize) -> Self {
        Self { inner: Matrix::identity(n), defect: 0.0 }
    }

    /// Largest `|a_ij − a_ji|` of the matrix this was built from.
    pub fn asymmetry_defect(&self) -> f64 {
        self.defect
    }

    pub fn matrix(&self) -> &Matrix {
        &self.inner
    }

    pub fn into_matrix(self) -> Matrix {
        self.inner
    }
}

impl Deref for SymMatrix {
    type Target = Matrix;

    fn deref(&self) -> &Matrix {
        &self.inner
    }
}

/// Diagonal matrix with strictly positive entries.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagPosMatrix {
    d: Vec<f64>,
}

impl DiagPosMatrix {
    pub fn new(d: Vec<f64>) -> Result<Self, LinalgError> {
        for (index, &value) in d.iter().enumerate() {
            if !(value > 0.0) || !value.is_finite() {
                return Err(LinalgError::NonPositiveDiagonal { index, value });
            }
        }
        Ok(Self { d })
    }

    pub fn identity(n: usize) -> Self {
        Self { d: alloc::vec![1.0; n] }
    }

    pub fn entries(&self) -> &[f64] {
        &self.d
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_diag(&self.d)
    }

    pub fn inverse(&self) -> Self {
        Self { d: self.d.iter().map(|v| 1.0 / v).collect() }
    }

    pub fn sqrt(&self) -> Self {
        Self { d: self.d.iter().map(|v| math::sqrt(*v)).collect() }
    }

    /// `D A`, scaling rows.
    pub fn mul_left(&self, a: &Matrix) -> Matrix {
        Matrix::from_fn(a.rows(), a.cols(), |i, j| self.d[i] * a[(i, j)])
    }

    /// `A D`, scaling columns.
    pub fn mul_right(&self, a: &Matrix) -> Matrix {
        Matrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)] * self.d[j])
    }

    /// Extracts the diagonal of `a`, requiring it to be a positive diagonal matrix.
    pub fn from_matrix(a: &Matrix, tol: f64) -> Result<Self, LinalgError> {
        a.ensure_square()?;
        let n = a.rows();
        for i in 0..n {
            for j in 0..n {
                if i != j && math::abs(a[(i, j)]) > tol {
                    return Err(LinalgError::NotPositiveDefinite);
                }
            }
        }
        Self::new(a.diag())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetrizes_and_records_defect() {
        let s = SymMatrix::new(Matrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]])).unwrap();
        assert_eq!(s[(0, 1)], 1.0);
        assert_eq!(s[(1, 0)], 1.0);
        assert_eq!(s.asymmetry_defect(), 2.0);
    }

    #[test]
    fn diag_rejects_nonpositive() {
        assert!(matches!(
            DiagPosMatrix::new(alloc::vec![1.0, 0.0]),
            Err(LinalgError::NonPositiveDiagonal { index: 1, .. })
        ));
    }
}
