use super::{sqrtm_psd, svd, sym_eigen, LinalgError, Matrix};
use crate::math;

/// Smallest eigenvalue of the symmetric part of `a`.
pub fn min_eig(a: &Matrix) -> Result<f64, LinalgError> {
    Ok(sym_eigen(a)?.values.first().copied().unwrap_or(f64::INFINITY))
}

/// Largest eigenvalue of the symmetric part of `a`.
pub fn max_eig(a: &Matrix) -> Result<f64, LinalgError> {
    Ok(sym_eigen(a)?.values.last().copied().unwrap_or(f64::NEG_INFINITY))
}

/// Spectral norm.
pub fn sigma_max(a: &Matrix) -> Result<f64, LinalgError> {
    if a.rows() == 0 || a.cols() == 0 {
        return Ok(0.0);
    }
    // Columns of a wide matrix are cheaper to orthogonalize after transposing.
    let d = if a.cols() > a.rows() { svd(&a.transpose())? } else { svd(a)? };
    Ok(d.s[0])
}

/// Smallest singular value of a square or tall matrix.
pub fn sigma_min(a: &Matrix) -> Result<f64, LinalgError> {
    if a.cols() == 0 {
        return Ok(0.0);
    }
    let d = svd(a)?;
    Ok(d.s.last().copied().unwrap_or(0.0))
}

/// `P^{-1/2}` for symmetric positive definite `P`.
pub fn inv_sqrtm_pd(p: &Matrix) -> Result<Matrix, LinalgError> {
    let e = sym_eigen(p)?;
    if e.values.first().copied().unwrap_or(1.0) <= 0.0 {
        return Err(LinalgError::NotPositiveDefinite);
    }
    Ok(e.map(|l| 1.0 / math::sqrt(l)))
}

/// `‖x‖_P = sqrt(xᵀ P x)`.
pub fn weighted_norm(x: &[f64], p: &Matrix) -> f64 {
    let px = p.mul_vec(x);
    math::sqrt(super::dot(x, &px).max(0.0))
}

/// Induced norm `‖A‖_{P_in → P_out} = σ_max(P_out^{1/2} A P_in^{-1/2})`.
pub fn induced_norm(a: &Matrix, p_out: &Matrix, p_in: &Matrix) -> Result<f64, LinalgError> {
    if p_out.rows() != a.rows() || p_in.rows() != a.cols() {
        return Err(LinalgError::DimensionMismatch {
            expected: (p_out.rows(), p_in.rows()),
            found: a.shape(),
        });
    }
    let so = sqrtm_psd(p_out)?;
    let si = inv_sqrtm_pd(p_in)?;
    sigma_max(&so.matmul(a).matmul(&si))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_eig_of_diagonal() {
        assert_eq!(min_eig(&Matrix::from_diag(&[2.0, -5.0])).unwrap(), -5.0);
    }

    #[test]
    fn induced_norm_scales_with_weights() {
        let v = induced_norm(&Matrix::identity(2), &Matrix::identity(2), &Matrix::identity(2).scale(4.0))
            .unwrap();
        assert!(math::abs(v - 0.5) < 1e-14);
    }

    #[test]
    fn weighted_norm_of_unit_vector() {
        let p = Matrix::from_diag(&[9.0, 1.0]);
        assert!(math::abs(weighted_norm(&[1.0, 0.0], &p) - 3.0) < 1e-15);
    }

    #[test]
    fn sigma_extremes() {
        let a = Matrix::from_rows(&[[3.0, 0.0], [4.0, 5.0]]);
        // singular values of [[3,0],[4,5]] are sqrt(45) and sqrt(5)
        assert!(math::abs(sigma_max(&a).unwrap() - math::sqrt(45.0)) < 1e-12);
        assert!(math::abs(sigma_min(&a).unwrap() - math::sqrt(5.0)) < 1e-12);
    }
}
