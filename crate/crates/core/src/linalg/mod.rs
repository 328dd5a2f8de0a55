//! Dense linear algebra on small matrices.

mod decomp;
mod eigen;
mod matrix;
mod norms;
mod sym;

pub use decomp::{
    cholesky, determinant, inverse, lu_solve, null_basis, sqrtm_psd, svd, sym_eigen, Svd,
    SymEigen,
};
pub use eigen::{eigenvalues, is_hurwitz, is_schur_stable, spectral_abscissa, spectral_radius};
pub use matrix::{add_vec, axpy, dot, norm2, sub_vec, Matrix};
pub use norms::{induced_norm, inv_sqrtm_pd, min_eig, max_eig, sigma_max, sigma_min, weighted_norm};
pub use sym::{DiagPosMatrix, SymMatrix};

/// Failures of the dense kernels.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch { expected: (usize, usize), found: (usize, usize) },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("diagonal entry {index} is not strictly positive ({value})")]
    NonPositiveDiagonal { index: usize, value: f64 },
    #[error("non-finite entry")]
    NonFinite,
    #[error("iteration did not converge")]
    NoConvergence,
}
