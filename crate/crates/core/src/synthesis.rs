//! Feedback, observer and integral-gain synthesis for firing-rate networks.
//!
//! All designs target the FR/CTS/MONE certificate. Every returned gain is
//! re-certified on the closed loop with the numeric block oracle.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::certificates::{certificate_margin, CertError, CertificateSpec};
use crate::linalg::{
    eigenvalues, induced_norm, inverse, max_eig, null_basis, svd, DiagPosMatrix, Matrix, SymMatrix,
};
use crate::lmi::{solve_feasibility, AffineExpr, AffineLmi, SolveOptions, DELTA_PD};

/// Controller, observer and integral gains with their certified rates.
#[derive(Clone, Debug)]
pub struct GainSet {
    pub k_f: Matrix,
    pub l: Matrix,
    /// Integral gain; the integrator runs `u̇ = ε·K_i·(r − y)`.
    pub k_i: Matrix,
    pub epsilon: f64,
    pub c_k: f64,
    pub c_o: f64,
    pub c_r: f64,
    pub p_x: Matrix,
    pub p_o: Matrix,
    pub p_r: Matrix,
}

/// Induced-norm constants of the low-gain condition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormConstants {
    pub ell_u: f64,
    pub ell_k: f64,
    pub ell_ir: f64,
    pub ell_iu: f64,
}

/// Result of [`synth_state_feedback`].
#[derive(Clone, Debug)]
pub struct FeedbackDesign {
    pub k: Matrix,
    pub x: SymMatrix,
    pub d: DiagPosMatrix,
    /// Closed-loop certificate margin at `P = X⁻¹`, `Q = D⁻¹`.
    pub margin: f64,
    pub iterations: usize,
}

impl FeedbackDesign {
    pub fn p(&self) -> Result<Matrix, CertError> {
        Ok(inverse(self.x.matrix())?)
    }
}

/// Result of [`synth_observer`].
#[derive(Clone, Debug)]
pub struct ObserverDesign {
    pub l: Matrix,
    pub p: SymMatrix,
    pub q: DiagPosMatrix,
    pub margin: f64,
    pub iterations: usize,
}

/// Result of [`synth_integral_gain`].
#[derive(Clone, Debug)]
pub struct IntegralDesign {
    /// `P⁻¹Y`, used as `K_i` with the integrator `u̇ = ε·K_i·(r − y)`.
    pub k_scaled: Matrix,
    pub p: SymMatrix,
    pub y: Matrix,
    pub q: DiagPosMatrix,
    pub margin: f64,
    pub iterations: usize,
}

/// How `Q` enters the reduced-dynamics inequality.
#[derive(Clone, Debug)]
pub enum IntegralQ {
    Free,
    Fixed(DiagPosMatrix),
}

fn check_rate(c: f64) -> Result<(), CertError> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(CertError::InvalidInput(format!("rate {c} outside (0, 1]")));
    }
    Ok(())
}

fn check_square(w: &Matrix) -> Result<usize, CertError> {
    if !w.is_square() || w.rows() == 0 || !w.is_finite() {
        return Err(CertError::InvalidInput(format!("W must be a finite square matrix, got {:?}", w.shape())));
    }
    Ok(w.rows())
}

fn verified(margin: f64, opts: &SolveOptions) -> Result<f64, CertError> {
    let floor = if opts.target_margin > 0.0 { 0.0 } else { -1e-9 };
    if margin < floor {
        return Err(CertError::Verification { margin });
    }
    Ok(margin)
}

/// `[[−2(1−c)X, D + XWᵀ + YᵀBᵀ], [·, −2D]] ⪯ 0`, giving `K = YX⁻¹`.
pub fn synth_state_feedback(w: &Matrix, b: &Matrix, c: f64, opts: &SolveOptions) -> Result<FeedbackDesign, CertError> {
    let n = check_square(w)?;
    check_rate(c)?;
    if b.rows() != n || b.cols() == 0 {
        return Err(CertError::InvalidInput(format!("B must have {n} rows, got {:?}", b.shape())));
    }
    let m = b.cols();
    let mut lmi = AffineLmi::new();
    let xv = lmi.sym_pd("X", n, DELTA_PD);
    let dv = lmi.diag_pd("D", n, DELTA_PD);
    let yv = lmi.rect("Y", m, n);
    lmi.normalize_trace(xv, n as f64);
    let (x, d, y) = (lmi.expr(xv), lmi.expr(dv), lmi.expr(yv));
    let off = d.add(&x.rmul(&w.transpose())).add(&y.transpose().rmul(&b.transpose()));
    lmi.add_nsd("state feedback", AffineExpr::sym2(&x.scale(-2.0 * (1.0 - c)), &off, &d.scale(-2.0)));
    let r = solve_feasibility(&lmi, opts)?;
    if !r.feasible() {
        return Err(CertError::from_result(&r));
    }
    let xm = lmi.value(&r.x, xv);
    let dm = lmi.value(&r.x, dv);
    let ym = lmi.value(&r.x, yv);
    let xinv = inverse(&xm)?;
    let k = ym.matmul(&xinv);
    let d = DiagPosMatrix::new(dm.diag())?;
    let w_cl = w + &b.matmul(&k);
    let margin = certificate_margin(&w_cl, &CertificateSpec::fr_cts_mone(c), &xinv, &d.inverse().to_matrix())?;
    let margin = verified(margin, opts)?;
    Ok(FeedbackDesign { k, x: SymMatrix::new(xm)?, d, margin, iterations: r.iterations })
}

/// Projected test: does some gain `K` make `W + BK` certify at some `c > 0`?
pub fn feedback_feasible_projection(w: &Matrix, b: &Matrix, opts: &SolveOptions) -> Result<bool, CertError> {
    let n = check_square(w)?;
    if b.rows() != n {
        return Err(CertError::InvalidInput(format!("B must have {n} rows, got {:?}", b.shape())));
    }
    let pi = null_basis(&b.transpose())?;
    if pi.cols() == 0 {
        return Ok(true);
    }
    let mut lmi = AffineLmi::new();
    let xv = lmi.sym_pd("X", n, DELTA_PD);
    let dv = lmi.diag_pd("D", n, DELTA_PD);
    lmi.normalize_trace(xv, n as f64);
    let (x, d) = (lmi.expr(xv), lmi.expr(dv));
    let off = d.add(&x.rmul(&w.transpose())).rmul(&pi);
    lmi.add_nsd("projected feedback", AffineExpr::sym2(&x.scale(-2.0), &off, &d.scale(-2.0).congruence(&pi)));
    projected_outcome(&lmi, opts)
}

fn projected_outcome(lmi: &AffineLmi, opts: &SolveOptions) -> Result<bool, CertError> {
    let r = solve_feasibility(lmi, opts)?;
    match r.status {
        crate::lmi::SolveStatus::BudgetExhausted => Err(CertError::from_result(&r)),
        _ => Ok(r.feasible()),
    }
}

/// `[[−2(1−c)P, P + WᵀQ − CᵀMᵀ], [·, −2Q]] ⪯ 0`, giving `L = Q⁻¹M`.
pub fn synth_observer(w: &Matrix, c_out: &Matrix, c: f64, opts: &SolveOptions) -> Result<ObserverDesign, CertError> {
    let n = check_square(w)?;
    check_rate(c)?;
    if c_out.cols() != n || c_out.rows() == 0 {
        return Err(CertError::InvalidInput(format!("C must have {n} columns, got {:?}", c_out.shape())));
    }
    let p_dim = c_out.rows();
    let mut lmi = AffineLmi::new();
    let pv = lmi.sym_pd("P", n, DELTA_PD);
    let qv = lmi.diag_pd("Q", n, DELTA_PD);
    let mv = lmi.rect("M", n, p_dim);
    lmi.normalize_trace(pv, n as f64);
    let (p, q, m) = (lmi.expr(pv), lmi.expr(qv), lmi.expr(mv));
    let off = p.add(&q.lmul(&w.transpose())).sub(&m.transpose().lmul(&c_out.transpose()));
    lmi.add_nsd("observer", AffineExpr::sym2(&p.scale(-2.0 * (1.0 - c)), &off, &q.scale(-2.0)));
    let r = solve_feasibility(&lmi, opts)?;
    if !r.feasible() {
        return Err(CertError::from_result(&r));
    }
    let pm = lmi.value(&r.x, pv);
    let q = DiagPosMatrix::new(lmi.value(&r.x, qv).diag())?;
    let mm = lmi.value(&r.x, mv);
    let l = q.inverse().mul_left(&mm);
    let w_obs = w - &l.matmul(c_out);
    let margin = certificate_margin(&w_obs, &CertificateSpec::fr_cts_mone(c), &pm, &q.to_matrix())?;
    let margin = verified(margin, opts)?;
    Ok(ObserverDesign { l, p: SymMatrix::new(pm)?, q, margin, iterations: r.iterations })
}

/// Projected test for the existence of a certifying observer gain.
pub fn observer_feasible_projection(w: &Matrix, c_out: &Matrix, opts: &SolveOptions) -> Result<bool, CertError> {
    let n = check_square(w)?;
    if c_out.cols() != n {
        return Err(CertError::InvalidInput(format!("C must have {n} columns, got {:?}", c_out.shape())));
    }
    let pi = null_basis(c_out)?;
    if pi.cols() == 0 {
        return Ok(true);
    }
    let mut lmi = AffineLmi::new();
    let pv = lmi.sym_pd("P", n, DELTA_PD);
    let qv = lmi.diag_pd("Q", n, DELTA_PD);
    lmi.normalize_trace(pv, n as f64);
    let (p, q) = (lmi.expr(pv), lmi.expr(qv));
    let off = p.add(&q.lmul(&w.transpose())).lmul(&pi.transpose());
    lmi.add_nsd("projected observer", AffineExpr::sym2(&p.scale(-2.0).congruence(&pi), &off, &q.scale(-2.0)));
    projected_outcome(&lmi, opts)
}

fn pbh_full_rank(a: &Matrix, lambda: (f64, f64), extra: &Matrix) -> Result<bool, CertError> {
    // Real embedding of the complex n×(n+k) matrix [A − λI | E].
    let n = a.rows();
    let k = extra.cols();
    let mut re = Matrix::zeros(n, n + k);
    let mut im = Matrix::zeros(n, n + k);
    for i in 0..n {
        for j in 0..n {
            re[(i, j)] = a[(i, j)];
        }
        re[(i, i)] -= lambda.0;
        im[(i, i)] = -lambda.1;
        for j in 0..k {
            re[(i, n + j)] = extra[(i, j)];
        }
    }
    let emb = Matrix::block2(&re, &im.scale(-1.0), &im, &re);
    let s = svd(&emb)?.s;
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Ok(false);
    }
    let rank = s.iter().filter(|&&v| v > 1e-8 * smax).count();
    Ok(rank >= 2 * n)
}

/// PBH test of `(W − I, B)` over eigenvalues with nonnegative real part.
pub fn stabilizability_check(w: &Matrix, b: &Matrix) -> Result<bool, CertError> {
    let n = check_square(w)?;
    if b.rows() != n {
        return Err(CertError::InvalidInput(format!("B must have {n} rows, got {:?}", b.shape())));
    }
    let a = w - &Matrix::identity(n);
    for lam in eigenvalues(&a)? {
        if lam.0 >= 0.0 && !pbh_full_rank(&a, lam, b)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// PBH test of `(W − I, C)`, the dual of [`stabilizability_check`].
pub fn detectability_check(w: &Matrix, c_out: &Matrix) -> Result<bool, CertError> {
    let n = check_square(w)?;
    if c_out.cols() != n {
        return Err(CertError::InvalidInput(format!("C must have {n} columns, got {:?}", c_out.shape())));
    }
    stabilizability_check(&w.transpose(), &c_out.transpose())
}

/// Reduced-dynamics blocks `(2c_rP − 2δBᵀQB, Z − YC, −R)` as affine expressions.
#[allow(clippy::too_many_arguments)]
fn integral_block(
    a: &Matrix,
    b: &Matrix,
    c_out: &Matrix,
    delta: f64,
    c_r: f64,
    p: &AffineExpr,
    y: &AffineExpr,
    q: &AffineExpr,
) -> AffineExpr {
    let n = a.rows();
    let mix = &Matrix::identity(n).scale(1.0 - delta) + &a.scale(2.0 * delta);
    let tl = p.scale(2.0 * c_r).sub(&q.congruence(b).scale(2.0 * delta));
    let z = q.rmul(&mix).lmul(&b.transpose());
    let tr = z.sub(&y.rmul(c_out));
    let r = q.congruence(a).scale(2.0 * delta).add(&q.rmul(a).he().scale(1.0 - delta));
    AffineExpr::sym2(&tl, &tr, &r.neg())
}

/// Numeric reduced-dynamics block at `(P, Y, Q)`.
#[allow(clippy::too_many_arguments)]
pub fn integral_block_numeric(
    w_cl: &Matrix,
    b: &Matrix,
    c_out: &Matrix,
    delta: f64,
    c_r: f64,
    p: &Matrix,
    y: &Matrix,
    q: &Matrix,
) -> Matrix {
    let a = &Matrix::identity(w_cl.rows()) - w_cl;
    let e = integral_block(
        &a,
        b,
        c_out,
        delta,
        c_r,
        &AffineExpr::constant(p.clone()),
        &AffineExpr::constant(y.clone()),
        &AffineExpr::constant(q.clone()),
    );
    e.eval(&[])
}

/// Integral gain making `u̇ = P⁻¹Y(r − Cx*(u))` contract at rate `c_r`.
///
/// `δ ∈ (0, 1]` is the lower slope bound of the activation over the
/// operating region.
#[allow(clippy::too_many_arguments)]
pub fn synth_integral_gain(
    w_cl: &Matrix,
    b: &Matrix,
    c_out: &Matrix,
    delta: f64,
    c_r: f64,
    q_mode: &IntegralQ,
    opts: &SolveOptions,
) -> Result<IntegralDesign, CertError> {
    let n = check_square(w_cl)?;
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(CertError::InvalidInput(format!("delta {delta} outside (0, 1]")));
    }
    if !(c_r > 0.0) || !c_r.is_finite() {
        return Err(CertError::InvalidInput(format!("c_r {c_r} must be positive")));
    }
    if b.rows() != n || c_out.cols() != n || b.cols() == 0 || c_out.rows() == 0 {
        return Err(CertError::InvalidInput(format!(
            "nonconformable B {:?} and C {:?} for n = {n}",
            b.shape(),
            c_out.shape()
        )));
    }
    let m = b.cols();
    let a = &Matrix::identity(n) - w_cl;
    let mut lmi = AffineLmi::new();
    let pv = lmi.sym_pd("P", m, DELTA_PD);
    let yv = lmi.rect("Y", m, c_out.rows());
    // With Q fixed this pins the scale of P; otherwise P → 0 trivializes c_r.
    lmi.normalize_trace(pv, m as f64);
    let (q, qv) = match q_mode {
        IntegralQ::Free => {
            let qv = lmi.diag_pd("Q", n, DELTA_PD);
            (lmi.expr(qv), Some(qv))
        }
        IntegralQ::Fixed(qd) => {
            if qd.dim() != n {
                return Err(CertError::InvalidInput(format!("fixed Q has dimension {}, expected {n}", qd.dim())));
            }
            (AffineExpr::constant(qd.to_matrix()), None)
        }
    };
    let (p, y) = (lmi.expr(pv), lmi.expr(yv));
    lmi.add_nsd("reduced dynamics", integral_block(&a, b, c_out, delta, c_r, &p, &y, &q));
    let r = solve_feasibility(&lmi, opts)?;
    if !r.feasible() {
        return Err(CertError::from_result(&r));
    }
    let pm = lmi.value(&r.x, pv);
    let ym = lmi.value(&r.x, yv);
    let q = match (q_mode, qv) {
        (IntegralQ::Fixed(qd), _) => qd.clone(),
        (_, Some(qv)) => DiagPosMatrix::new(lmi.value(&r.x, qv).diag())?,
        _ => unreachable!(),
    };
    let block = integral_block_numeric(w_cl, b, c_out, delta, c_r, &pm, &ym, &q.to_matrix());
    let margin = verified(-max_eig(&block)?, opts)?;
    let k_scaled = inverse(&pm)?.matmul(&ym);
    Ok(IntegralDesign { k_scaled, p: SymMatrix::new(pm)?, y: ym, q, margin, iterations: r.iterations })
}

/// `sup_{D diagonal, 0 ⪯ D ⪯ I} ‖D·B‖` from `P_in` to `P_out`.
///
/// The norm is convex in `D`, so the supremum is attained at a vertex of the
/// box. All `2ⁿ` vertices are enumerated for `n ≤ 12`; larger `n` falls back
/// to the looser bound `‖P_out^{1/2}‖₂·‖B‖_{P_in→2}`.
pub fn input_gain(b: &Matrix, p_out: &Matrix, p_in: &Matrix) -> Result<f64, CertError> {
    let n = b.rows();
    if n <= 12 {
        let mut best: f64 = 0.0;
        for mask in 1u32..(1u32 << n) {
            let mut db = b.clone();
            for i in 0..n {
                if mask & (1 << i) == 0 {
                    for j in 0..b.cols() {
                        db[(i, j)] = 0.0;
                    }
                }
            }
            best = best.max(induced_norm(&db, p_out, p_in)?);
        }
        Ok(best)
    } else {
        let i_n = Matrix::identity(n);
        let outer = induced_norm(&i_n, p_out, &i_n)?;
        let inner = induced_norm(b, &i_n, p_in)?;
        Ok(outer * inner)
    }
}

/// Norm constants for the tracking loop. The input space `U` carries the
/// reduced-dynamics weight `P_R`, so `ℓ_iR` and `ℓ_iU` coincide.
pub fn norm_constants(
    b: &Matrix,
    k_f: &Matrix,
    k_i: &Matrix,
    c_out: &Matrix,
    p_x: &Matrix,
    p_o: &Matrix,
    p_r: &Matrix,
) -> Result<NormConstants, CertError> {
    let ell_u = input_gain(b, p_x, p_r)?;
    let ell_k = induced_norm(k_f, p_r, p_o)?;
    let kc = k_i.matmul(c_out);
    let ell_ir = induced_norm(&kc, p_r, p_x)?;
    Ok(NormConstants { ell_u, ell_k, ell_ir, ell_iu: ell_ir })
}

/// Supremum of admissible `ε` under both low-gain inequalities.
pub fn epsilon_bound(k: &NormConstants, c_k: f64, c_r: f64) -> f64 {
    let lhs1 = k.ell_iu * k.ell_u - c_k * c_r;
    let b1 = if lhs1 > 0.0 { c_k * c_k / lhs1 } else { f64::INFINITY };
    let lhs2 = k.ell_iu * k.ell_u * (c_k * c_r + k.ell_u * k.ell_ir);
    let b2 = if lhs2 > 0.0 { c_r * c_k * c_k * c_k / lhs2 } else { f64::INFINITY };
    b1.min(b2)
}

/// The comparison matrix `M(ε)` and whether it is Hurwitz.
pub fn tracking_gain_matrix(k: &NormConstants, c_k: f64, c_o: f64, c_r: f64, epsilon: f64) -> Result<(Matrix, bool), CertError> {
    let a = k.ell_iu * k.ell_u;
    let m = Matrix::from_rows(&[
        vec![-c_o, 0.0, 0.0],
        vec![k.ell_u * k.ell_k, -(c_k - epsilon * a / c_k), epsilon * a * k.ell_u / (c_k * c_k)],
        vec![0.0, epsilon * k.ell_ir, -epsilon * c_r],
    ]);
    let hurwitz = crate::linalg::is_hurwitz(&m)?;
    Ok((m, hurwitz))
}

/// Trace and determinant of the trailing `2×2` block of `M(ε)`.
pub fn trailing_trace_det(m: &Matrix) -> (f64, f64) {
    let (a, b, c, d) = (m[(1, 1)], m[(1, 2)], m[(2, 1)], m[(2, 2)]);
    (a + d, a * d - b * c)
}

/// Assembles a [`GainSet`] from the three designs and a chosen `ε`.
pub fn gain_set(
    fb: &FeedbackDesign,
    c_k: f64,
    obs: &ObserverDesign,
    c_o: f64,
    int: &IntegralDesign,
    c_r: f64,
    epsilon: f64,
) -> Result<GainSet, CertError> {
    Ok(GainSet {
        k_f: fb.k.clone(),
        l: obs.l.clone(),
        k_i: int.k_scaled.clone(),
        epsilon,
        c_k,
        c_o,
        c_r,
        p_x: fb.p()?,
        p_o: obs.p.matrix().clone(),
        p_r: int.p.matrix().clone(),
    })
}

impl GainSet {
    pub fn norm_constants(&self, b: &Matrix, c_out: &Matrix) -> Result<NormConstants, CertError> {
        norm_constants(b, &self.k_f, &self.k_i, c_out, &self.p_x, &self.p_o, &self.p_r)
    }

    /// Certified rates as a vector `(c_K, c_O, c_r)`.
    pub fn rates(&self) -> Vec<f64> {
        vec![self.c_k, self.c_o, self.c_r]
    }
}
