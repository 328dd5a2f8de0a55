//! Contraction certificates for firing-rate and Hopfield networks.
//!
//! Every certificate is a Lur'e-type matrix inequality in a symmetric
//! `P ≻ 0` and a diagonal `Q ≻ 0`. The LMIs handed to the solver are
//! assembled generically from `(A, B, H)` and an incremental multiplier; the
//! closed-form blocks in [`table_block`] are kept separately and used to
//! re-verify every returned certificate.

use alloc::format;
use alloc::string::String;
use alloc::vec;

use crate::linalg::{
    inverse, max_eig, min_eig, sym_eigen, DiagPosMatrix, LinalgError, Matrix, SymMatrix,
};
use crate::lmi::{
    bisect_rate, solve_feasibility, AffineExpr, AffineLmi, BisectOutcome, FeasResult, LmiError,
    SolveOptions, SolveStatus, Var, DELTA_PD,
};
use crate::math;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    FiringRate,
    Hopfield,
}

impl ModelKind {
    pub fn dual(self) -> Self {
        match self {
            ModelKind::FiringRate => ModelKind::Hopfield,
            ModelKind::Hopfield => ModelKind::FiringRate,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TimeDomain {
    Continuous,
    Discrete,
}

/// Slope class of a diagonal activation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ActivationClass {
    /// Slope-restricted to `[−1, 1]`.
    Cone,
    /// Slope-restricted to `[0, 1]`.
    Mone,
    Slope(f64, f64),
}

impl ActivationClass {
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            ActivationClass::Cone => (-1.0, 1.0),
            ActivationClass::Mone => (0.0, 1.0),
            ActivationClass::Slope(a, b) => (a, b),
        }
    }
}

/// A certification query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertificateSpec {
    pub model: ModelKind,
    pub domain: TimeDomain,
    pub nonlin: ActivationClass,
    /// `c` in continuous time, `ρ` in discrete time.
    pub rate: f64,
}

impl CertificateSpec {
    pub fn new(model: ModelKind, domain: TimeDomain, nonlin: ActivationClass, rate: f64) -> Self {
        Self { model, domain, nonlin, rate }
    }

    pub fn fr_cts_mone(c: f64) -> Self {
        Self::new(ModelKind::FiringRate, TimeDomain::Continuous, ActivationClass::Mone, c)
    }

    fn validate(&self) -> Result<(), CertError> {
        let r = self.rate;
        let ok = match self.domain {
            TimeDomain::Continuous => (0.0..=1.0).contains(&r),
            TimeDomain::Discrete => (0.0..1.0).contains(&r),
        };
        if !ok || !r.is_finite() {
            return Err(CertError::InvalidInput(format!("rate {r} outside the admissible range")));
        }
        let (k1, k2) = self.nonlin.bounds();
        if !(k1 <= k2) || !k1.is_finite() || !k2.is_finite() {
            return Err(CertError::InvalidInput(format!("invalid slope bounds [{k1}, {k2}]")));
        }
        Ok(())
    }
}

/// A verified solution of a certificate inequality.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub spec: CertificateSpec,
    pub p: SymMatrix,
    pub q: DiagPosMatrix,
    /// `−λ_max` of the certificate block at `(P, Q)`.
    pub margin: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CertError {
    #[error("infeasible (best margin {best_margin:.3e}, achievable at most {upper_bound:.3e})")]
    Infeasible { best_margin: f64, upper_bound: f64 },
    #[error("solver budget exhausted (best margin {best_margin:.3e})")]
    BudgetExhausted { best_margin: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no certificate exists: {0}")]
    NoCertificate(String),
    #[error("re-verification failed with margin {margin:.3e}")]
    Verification { margin: f64 },
    #[error(transparent)]
    Lmi(#[from] LmiError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

impl CertError {
    pub(crate) fn from_result(r: &FeasResult) -> Self {
        match r.status {
            SolveStatus::BudgetExhausted => CertError::BudgetExhausted { best_margin: r.worst_margin },
            _ => CertError::Infeasible { best_margin: r.worst_margin, upper_bound: r.margin_upper_bound },
        }
    }
}

/// Numeric incremental multiplier matrix.
#[derive(Clone, Debug)]
pub struct MultiplierMatrix {
    pub m: SymMatrix,
}

impl MultiplierMatrix {
    /// `[dx; dψ]ᵀ M [dx; dψ]`.
    pub fn quadratic_form(&self, dx: &[f64], dpsi: &[f64]) -> f64 {
        let mut v = dx.to_vec();
        v.extend_from_slice(dpsi);
        crate::linalg::dot(&v, &self.m.mul_vec(&v))
    }
}

/// `[[−2k₁k₂Q, (k₁+k₂)Q], [(k₁+k₂)Q, −2Q]]`.
pub fn multiplier_for_slope(k1: f64, k2: f64, q: &DiagPosMatrix) -> MultiplierMatrix {
    let qm = q.to_matrix();
    let m = Matrix::block2(
        &qm.scale(-2.0 * k1 * k2),
        &qm.scale(k1 + k2),
        &qm.scale(k1 + k2),
        &qm.scale(-2.0),
    );
    MultiplierMatrix { m: SymMatrix::new(m).expect("square by construction") }
}

/// Multiplier as an affine expression in `Q`. CONE and MONE use the
/// normalized forms `[[Q, 0], [0, −Q]]` and `[[0, Q], [Q, −2Q]]`.
pub fn multiplier_expr(class: ActivationClass, q: &AffineExpr) -> AffineExpr {
    let m = q.rows();
    let z = AffineExpr::zeros(m, m);
    match class {
        ActivationClass::Cone => AffineExpr::sym2(q, &z, &q.neg()),
        ActivationClass::Mone => AffineExpr::sym2(&z, q, &q.scale(-2.0)),
        ActivationClass::Slope(k1, k2) => {
            AffineExpr::sym2(&q.scale(-2.0 * k1 * k2), &q.scale(k1 + k2), &q.scale(-2.0))
        }
    }
}

/// An assembled certificate LMI with handles to its `P` and `Q`.
#[derive(Clone, Debug)]
pub struct LureLmi {
    pub lmi: AffineLmi,
    pub p: Var,
    pub q: Var,
}

/// Builds the Lur'e LMI for `ẋ = Ax + BΨ(Hx)` (or `x⁺ = Ax + BΨ(Hx)`).
///
/// Continuous: `[[PA + AᵀP + 2cP, PB], [BᵀP, 0]] + M_H ⪯ 0`.
/// Discrete: `[[AᵀPA − ρ²P, AᵀPB], [BᵀPA, BᵀPB]] + M_H ⪯ 0`,
/// with `M_H = diag(Hᵀ, I) M diag(H, I)`. `P` is trace-normalized.
pub fn lure_lmi(
    a: &Matrix,
    b: &Matrix,
    h: &Matrix,
    class: ActivationClass,
    domain: TimeDomain,
    rate: f64,
) -> Result<LureLmi, CertError> {
    let n = a.rows();
    let m = h.rows();
    if !a.is_square() || b.rows() != n || h.cols() != n || b.cols() != m {
        return Err(CertError::InvalidInput(format!(
            "nonconformable Lur'e data: A {:?}, B {:?}, H {:?}",
            a.shape(),
            b.shape(),
            h.shape()
        )));
    }
    Ok(build_lure(a, b, h, class, domain, rate))
}

fn build_lure(a: &Matrix, b: &Matrix, h: &Matrix, class: ActivationClass, domain: TimeDomain, rate: f64) -> LureLmi {
    let n = a.rows();
    let m = h.rows();
    let mut lmi = AffineLmi::new();
    let p = lmi.sym_pd("P", n, DELTA_PD);
    let q = lmi.diag_pd("Q", m, DELTA_PD);
    lmi.normalize_trace(p, n as f64);
    let pe = lmi.expr(p);
    let qe = lmi.expr(q);

    let base = match domain {
        TimeDomain::Continuous => {
            let tl = pe.rmul(a).he().add(&pe.scale(2.0 * rate));
            let tr = pe.rmul(b);
            AffineExpr::sym2(&tl, &tr, &AffineExpr::zeros(m, m))
        }
        TimeDomain::Discrete => {
            let tl = pe.congruence(a).sub(&pe.scale(rate * rate));
            let tr = pe.rmul(b).lmul(&a.transpose());
            let br = pe.congruence(b);
            AffineExpr::sym2(&tl, &tr, &br)
        }
    };
    let lift = Matrix::block_diag(&[h.clone(), Matrix::identity(m)]);
    let mh = multiplier_expr(class, &qe).congruence(&lift);
    lmi.add_nsd("certificate", base.add(&mh));
    LureLmi { lmi, p, q }
}

/// `(A, B, H)` of the Lur'e form for a model and time domain.
pub fn lure_data(w: &Matrix, model: ModelKind, domain: TimeDomain) -> (Matrix, Matrix, Matrix) {
    let n = w.rows();
    let a = match domain {
        TimeDomain::Continuous => Matrix::identity(n).scale(-1.0),
        TimeDomain::Discrete => Matrix::zeros(n, n),
    };
    match model {
        ModelKind::FiringRate => (a, Matrix::identity(n), w.clone()),
        ModelKind::Hopfield => (a, w.clone(), Matrix::identity(n)),
    }
}

/// The certificate LMI for `W` under `spec`.
pub fn certificate_lmi(w: &Matrix, spec: &CertificateSpec) -> Result<LureLmi, CertError> {
    if !w.is_square() || w.rows() == 0 {
        return Err(CertError::InvalidInput(format!("W must be square, got {:?}", w.shape())));
    }
    if !w.is_finite() {
        return Err(CertError::InvalidInput("W has non-finite entries".into()));
    }
    spec.validate()?;
    let (a, b, h) = lure_data(w, spec.model, spec.domain);
    lure_lmi(&a, &b, &h, spec.nonlin, spec.domain, spec.rate)
}

/// Closed-form certificate block at numeric `(P, Q)`.
pub fn table_block(w: &Matrix, spec: &CertificateSpec, p: &Matrix, q: &Matrix) -> Matrix {
    let n = w.rows();
    let wt = w.transpose();
    let c = spec.rate;
    let rho2 = spec.rate * spec.rate;
    let z = Matrix::zeros(n, n);
    use ActivationClass::*;
    use ModelKind::*;
    use TimeDomain::*;
    let sym2 = |a: Matrix, b: Matrix, d: Matrix| {
        let bt = b.transpose();
        Matrix::block2(&a, &b, &bt, &d)
    };
    match (spec.model, spec.domain, spec.nonlin) {
        (FiringRate, Continuous, Mone) => {
            sym2(p.scale(-2.0 * (1.0 - c)), p + &wt.matmul(q), q.scale(-2.0))
        }
        (FiringRate, Continuous, Cone) => sym2(
            &p.scale(-2.0 * (1.0 - c)) + &wt.matmul(q).matmul(w),
            p.clone(),
            q.scale(-1.0),
        ),
        (FiringRate, Discrete, Mone) => sym2(p.scale(-rho2), wt.matmul(q), p - &q.scale(2.0)),
        (FiringRate, Discrete, Cone) => {
            sym2(&p.scale(-rho2) + &wt.matmul(q).matmul(w), z, p - q)
        }
        (Hopfield, Continuous, Mone) => {
            sym2(p.scale(-2.0 * (1.0 - c)), &p.matmul(w) + q, q.scale(-2.0))
        }
        (Hopfield, Continuous, Cone) => {
            sym2(&p.scale(-2.0 * (1.0 - c)) + q, p.matmul(w), q.scale(-1.0))
        }
        (Hopfield, Discrete, Mone) => {
            sym2(p.scale(-rho2), q.clone(), &wt.matmul(p).matmul(w) - &q.scale(2.0))
        }
        (Hopfield, Discrete, Cone) => sym2(&p.scale(-rho2) + q, z, &wt.matmul(p).matmul(w) - q),
        (model, domain, Slope(k1, k2)) => {
            let (a, b, h) = lure_data(w, model, domain);
            lure_block_numeric(&a, &b, &h, k1, k2, domain, spec.rate, p, q)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn lure_block_numeric(
    a: &Matrix,
    b: &Matrix,
    h: &Matrix,
    k1: f64,
    k2: f64,
    domain: TimeDomain,
    rate: f64,
    p: &Matrix,
    q: &Matrix,
) -> Matrix {
    let m = h.rows();
    let base = match domain {
        TimeDomain::Continuous => {
            let pa = p.matmul(a);
            let tl = &(&pa + &pa.transpose()) + &p.scale(2.0 * rate);
            let tr = p.matmul(b);
            Matrix::block2(&tl, &tr, &tr.transpose(), &Matrix::zeros(m, m))
        }
        TimeDomain::Discrete => {
            let tl = &a.tr_matmul(&p.matmul(a)) - &p.scale(rate * rate);
            let tr = a.tr_matmul(&p.matmul(b));
            let br = b.tr_matmul(&p.matmul(b));
            Matrix::block2(&tl, &tr, &tr.transpose(), &br)
        }
    };
    let mq = Matrix::block2(
        &q.scale(-2.0 * k1 * k2),
        &q.scale(k1 + k2),
        &q.scale(k1 + k2),
        &q.scale(-2.0),
    );
    let lift = Matrix::block_diag(&[h.clone(), Matrix::identity(m)]);
    &base + &lift.tr_matmul(&mq.matmul(&lift))
}

/// Margin `−λ_max` of the certificate block, after checking `P ≻ 0`.
pub fn certificate_margin(w: &Matrix, spec: &CertificateSpec, p: &Matrix, q: &Matrix) -> Result<f64, CertError> {
    if min_eig(p)? <= 0.0 {
        return Err(CertError::InvalidInput("P is not positive definite".into()));
    }
    Ok(-max_eig(&table_block(w, spec, p, q))?)
}

/// Re-verifies a certificate against `W`.
pub fn verify_certificate(w: &Matrix, cert: &Certificate) -> Result<f64, CertError> {
    certificate_margin(w, &cert.spec, cert.p.matrix(), &cert.q.to_matrix())
}

/// Decides the certificate for `W` and `spec`.
pub fn certify(w: &Matrix, spec: &CertificateSpec, opts: &SolveOptions) -> Result<Certificate, CertError> {
    let lure = certificate_lmi(w, spec)?;
    let r = solve_feasibility(&lure.lmi, opts)?;
    if !r.feasible() {
        return Err(CertError::from_result(&r));
    }
    let p = lure.lmi.value(&r.x, lure.p);
    let q = lure.lmi.value(&r.x, lure.q);
    let margin = certificate_margin(w, spec, &p, &q)?;
    let floor = if opts.target_margin > 0.0 { 0.5 * opts.target_margin } else { -1e-9 };
    if margin < floor {
        return Err(CertError::Verification { margin });
    }
    Ok(Certificate {
        spec: *spec,
        p: SymMatrix::new(p)?,
        q: DiagPosMatrix::new(q.diag())?,
        margin,
        iterations: r.iterations,
    })
}

/// Best rate for `W`: largest `c` in continuous time, smallest `ρ` in discrete time.
pub fn max_rate(
    w: &Matrix,
    model: ModelKind,
    domain: TimeDomain,
    nonlin: ActivationClass,
    tol: f64,
    opts: &SolveOptions,
) -> Result<BisectOutcome, CertError> {
    if !w.is_square() || w.rows() == 0 {
        return Err(CertError::InvalidInput(format!("W must be square, got {:?}", w.shape())));
    }
    let (a, b, h) = lure_data(w, model, domain);
    let solve = |r: f64| solve_feasibility(&build_lure(&a, &b, &h, nonlin, domain, r).lmi, opts);
    match domain {
        TimeDomain::Continuous => Ok(bisect_rate(solve, 0.0, 1.0, tol)?),
        TimeDomain::Discrete => {
            // Bisect κ = 1 − ρ, which is feasible-monotone in the usual direction.
            let hi = 1.0 - 1e-9;
            let out = bisect_rate(|k| solve(1.0 - k), 0.0, hi, tol)?;
            Ok(match out {
                BisectOutcome::Rate { rate, result, solves } => {
                    BisectOutcome::Rate { rate: 1.0 - rate, result, solves }
                }
                other => other,
            })
        }
    }
}

/// Diagonal `Q ≻ 0` with `WᵀQW − Q ≺ 0`.
pub fn schur_diag_stable(w: &Matrix, opts: &SolveOptions) -> Result<DiagPosMatrix, CertError> {
    diag_lyapunov(w, opts, |q, w| q.congruence(w).sub(q))
}

/// Diagonal `Q ≻ 0` with `Q(W − I) + (W − I)ᵀQ ≺ 0`.
pub fn lds_check(w: &Matrix, opts: &SolveOptions) -> Result<DiagPosMatrix, CertError> {
    diag_lyapunov(w, opts, |q, w| {
        let a = w - &Matrix::identity(w.rows());
        q.rmul(&a).he()
    })
}

fn diag_lyapunov(
    w: &Matrix,
    opts: &SolveOptions,
    block: impl Fn(&AffineExpr, &Matrix) -> AffineExpr,
) -> Result<DiagPosMatrix, CertError> {
    if !w.is_square() || w.rows() == 0 {
        return Err(CertError::InvalidInput(format!("W must be square, got {:?}", w.shape())));
    }
    let n = w.rows();
    let mut lmi = AffineLmi::new();
    let q = lmi.diag_pd("Q", n, DELTA_PD);
    lmi.normalize_trace(q, n as f64);
    let b = block(&lmi.expr(q), w);
    lmi.add_nsd("diagonal stability", b);
    let r = solve_feasibility(&lmi, opts)?;
    if !r.feasible() {
        return Err(CertError::from_result(&r));
    }
    Ok(DiagPosMatrix::new(lmi.value(&r.x, q).diag())?)
}

/// Dual certificate for `Wᵀ` under the other architecture.
///
/// Continuous time maps `(P, Q) ↦ (P⁻¹, Q⁻¹)`; discrete time maps
/// `(P, Q) ↦ (ρ⁻²P⁻¹, Q⁻¹)`, which is an involution and covers both MONE and
/// CONE. Returns the transposed weight matrix with the new certificate.
pub fn dual_transform(w: &Matrix, cert: &Certificate) -> Result<(Matrix, Certificate), CertError> {
    let spec = cert.spec;
    let pinv = inverse(cert.p.matrix())?;
    let p_new = match spec.domain {
        TimeDomain::Continuous => pinv,
        TimeDomain::Discrete => {
            if spec.rate <= 0.0 {
                return Err(CertError::InvalidInput("dual of a discrete certificate needs ρ > 0".into()));
            }
            pinv.scale(1.0 / (spec.rate * spec.rate))
        }
    };
    let q_new = cert.q.inverse();
    let wt = w.transpose();
    let spec_new = CertificateSpec { model: spec.model.dual(), ..spec };
    let margin = certificate_margin(&wt, &spec_new, &p_new, &q_new.to_matrix())?;
    Ok((
        wt,
        Certificate { spec: spec_new, p: SymMatrix::new(p_new)?, q: q_new, margin, iterations: 0 },
    ))
}

/// Continuous-time certificate with `c = (1 − ρ²)/2` and the same `(P, Q)`.
pub fn disc_to_cts_transfer(w: &Matrix, cert: &Certificate) -> Result<Certificate, CertError> {
    if cert.spec.domain != TimeDomain::Discrete {
        return Err(CertError::InvalidInput("certificate is not discrete-time".into()));
    }
    let rho = cert.spec.rate;
    let spec = CertificateSpec { domain: TimeDomain::Continuous, rate: 0.5 * (1.0 - rho * rho), ..cert.spec };
    let margin = certificate_margin(w, &spec, cert.p.matrix(), &cert.q.to_matrix())?;
    if margin < -1e-9 {
        return Err(CertError::Verification { margin });
    }
    Ok(Certificate { spec, p: cert.p.clone(), q: cert.q.clone(), margin, iterations: 0 })
}

/// Optimal-rate FR/CTS/MONE certificate for symmetric `W` with `α(W) < 1`.
pub fn symmetric_closed_form(w: &SymMatrix) -> Result<Certificate, CertError> {
    let n = w.rows();
    let e = sym_eigen(w.matrix())?;
    let alpha = *e.values.last().ok_or_else(|| CertError::InvalidInput("empty W".into()))?;
    if alpha >= 1.0 {
        return Err(CertError::NoCertificate(format!("spectral abscissa {alpha} ≥ 1")));
    }
    let (p, q, c) = if alpha <= 0.0 {
        let mut p = w.matrix().scale(-1.0);
        if math::abs(alpha) <= 1e-12 {
            for i in 0..n {
                p[(i, i)] += DELTA_PD;
            }
        }
        (p, DiagPosMatrix::identity(n), 1.0)
    } else {
        let s2 = |l: f64| {
            let s = 2.0 * alpha + 2.0 * math::sqrt((alpha * (alpha - l)).max(0.0));
            s * s
        };
        let p = e.map(s2);
        (p, DiagPosMatrix::new(vec![4.0 * alpha; n])?, 1.0 - alpha)
    };
    let spec = CertificateSpec::fr_cts_mone(c);
    let margin = certificate_margin(w.matrix(), &spec, &p, &q.to_matrix())?;
    if margin < -1e-7 {
        return Err(CertError::Verification { margin });
    }
    Ok(Certificate { spec, p: SymMatrix::new(p)?, q, margin, iterations: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn skew4() -> Matrix {
        Matrix::from_rows(&[[0.0, 4.0], [-4.0, 0.0]])
    }

    #[test]
    fn multiplier_examples() {
        let q = DiagPosMatrix::identity(1);
        let cone = multiplier_for_slope(-1.0, 1.0, &q);
        assert_eq!(*cone.m.matrix(), Matrix::from_diag(&[2.0, -2.0]));
        let mone = multiplier_for_slope(0.0, 1.0, &q);
        assert_eq!(*mone.m.matrix(), Matrix::from_rows(&[[0.0, 1.0], [1.0, -2.0]]));
        let id = multiplier_for_slope(1.0, 1.0, &q);
        assert_eq!(id.quadratic_form(&[0.7], &[0.7]), 0.0);
    }

    #[test]
    fn zero_weight_is_certified() {
        let c = certify(&Matrix::zeros(2, 2), &CertificateSpec::fr_cts_mone(0.5), &SolveOptions::default())
            .unwrap();
        assert!(c.margin >= 0.0);
    }

    #[test]
    fn skew_is_not_certified_but_is_lds() {
        for c in [0.01, 0.1, 0.5] {
            let r = certify(&skew4(), &CertificateSpec::fr_cts_mone(c), &SolveOptions::default());
            assert!(matches!(r, Err(CertError::Infeasible { .. })), "c = {c}: {r:?}");
        }
        let q = lds_check(&skew4(), &SolveOptions::default()).unwrap();
        assert_eq!(q.entries(), &[1.0, 1.0]);
    }

    #[test]
    fn lds_rejects_expansive_identity() {
        assert!(lds_check(&Matrix::identity(2).scale(2.0), &SolveOptions::default()).is_err());
        assert_eq!(lds_check(&Matrix::zeros(2, 2), &SolveOptions::default()).unwrap().entries(), &[1.0, 1.0]);
    }

    #[test]
    fn schur_examples() {
        let o = SolveOptions::default();
        assert_eq!(schur_diag_stable(&Matrix::from_diag(&[0.5, -0.9]), &o).unwrap().entries(), &[1.0, 1.0]);
        assert!(schur_diag_stable(&Matrix::identity(2), &o).is_err());
        let q = schur_diag_stable(&Matrix::from_rows(&[[0.0, 2.0], [0.0, 0.0]]), &o).unwrap();
        let w = Matrix::from_rows(&[[0.0, 2.0], [0.0, 0.0]]);
        let qm = q.to_matrix();
        assert!(max_eig(&(&w.tr_matmul(&qm.matmul(&w)) - &qm)).unwrap() < 0.0);
        // hand-picked Q = diag(1, 5) also works
        let h = Matrix::from_diag(&[1.0, 5.0]);
        assert!(max_eig(&(&w.tr_matmul(&h.matmul(&w)) - &h)).unwrap() < 0.0);
    }

    #[test]
    fn disc_cone_at_norm_bound() {
        let w = Matrix::identity(2).scale(0.6);
        let spec = CertificateSpec::new(ModelKind::FiringRate, TimeDomain::Discrete, ActivationClass::Cone, 0.6);
        let m = certificate_margin(&w, &spec, &Matrix::identity(2), &Matrix::identity(2)).unwrap();
        assert!(m >= 0.0);
    }

    #[test]
    fn symmetric_examples() {
        let c = symmetric_closed_form(&SymMatrix::new(Matrix::identity(2).scale(-1.0)).unwrap()).unwrap();
        assert_eq!(c.spec.rate, 1.0);
        assert!(c.p.approx_eq(&Matrix::identity(2), 0.0));

        let w = SymMatrix::new(Matrix::from_diag(&[0.5, -1.0])).unwrap();
        let c = symmetric_closed_form(&w).unwrap();
        assert!(math::abs(c.spec.rate - 0.5) < 1e-15);
        assert_eq!(c.q.entries(), &[2.0, 2.0]);
        let s = 1.0 + math::sqrt(3.0);
        assert!(c.p.approx_eq(&Matrix::from_diag(&[1.0, s * s]), 1e-12));

        let c = symmetric_closed_form(&SymMatrix::new(Matrix::identity(3).scale(0.999)).unwrap()).unwrap();
        assert!(math::abs(c.spec.rate - 0.001) < 1e-12);
        assert!(c.margin >= -1e-7);

        assert!(symmetric_closed_form(&SymMatrix::new(Matrix::identity(2)).unwrap()).is_err());
    }

    #[test]
    fn transfer_formula() {
        let w = Matrix::zeros(2, 2);
        let spec = CertificateSpec::new(ModelKind::FiringRate, TimeDomain::Discrete, ActivationClass::Mone, 0.6);
        let cert = certify(&w, &spec, &SolveOptions::default()).unwrap();
        let t = disc_to_cts_transfer(&w, &cert).unwrap();
        assert!(math::abs(t.spec.rate - 0.32) < 1e-15);
    }
}
