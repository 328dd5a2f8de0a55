//! Unconstrained parameterization of contracting weights and implicit layers.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::certificates::{certificate_margin, CertError, CertificateSpec};
use crate::linalg::{
    inv_sqrtm_pd, max_eig, min_eig, norm2, sigma_max, sigma_min, sqrtm_psd, sub_vec, LinalgError, Matrix,
};
use crate::math;
use crate::sim::{fixed_point_backoff, Activation, FixedPointOptions, SimError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DeqError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("S is not a contraction: ‖S‖₂ = {norm}")]
    NotContraction { norm: f64 },
    #[error("V is singular: σ_min(V) = {sigma_min:.3e}")]
    SingularV { sigma_min: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Cert(#[from] CertError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Constrained parameters `(d, S, V)` with `‖S‖₂ ≤ 1` and `V` nonsingular.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamWeights {
    pub d: Vec<f64>,
    pub s: Matrix,
    pub v: Matrix,
    pub c: f64,
}

/// Unconstrained parameters `(d, X, Y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FreeWeights {
    pub d: Vec<f64>,
    pub x: Matrix,
    pub y: Matrix,
    pub c: f64,
    /// Regularization `ε > 0` added to `YᵀY`.
    pub eps: f64,
}

/// Weight with its certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameterized {
    pub w: Matrix,
    pub p: Matrix,
    pub q: Matrix,
}

const CONTRACTION_TOL: f64 = 1e-10;
const SINGULAR_TOL: f64 = 1e-8;

fn check_rate(c: f64) -> Result<(), DeqError> {
    if !(0.0..=1.0).contains(&c) {
        return Err(DeqError::InvalidInput(format!("rate c = {c} outside [0, 1]")));
    }
    Ok(())
}

/// `W = 2√(1−c)·diag(e^d)·S·VᵀV − diag(e^{2d})·(VᵀV)²`, certified at rate `c`
/// by `P = (VᵀV)²`, `Q = diag(e^{−2d})`.
pub fn parameterize_weight(pw: &ParamWeights) -> Result<Parameterized, DeqError> {
    check_rate(pw.c)?;
    let n = pw.d.len();
    if n == 0 || pw.s.shape() != (n, n) || pw.v.shape() != (n, n) {
        return Err(DeqError::InvalidInput(format!(
            "d has length {n}; S {:?} and V {:?} must be {n}×{n}",
            pw.s.shape(),
            pw.v.shape()
        )));
    }
    let norm = sigma_max(&pw.s)?;
    if norm > 1.0 + CONTRACTION_TOL {
        return Err(DeqError::NotContraction { norm });
    }
    let smin = sigma_min(&pw.v)?;
    if smin < SINGULAR_TOL {
        return Err(DeqError::SingularV { sigma_min: smin });
    }
    let e: Vec<f64> = pw.d.iter().map(|&x| math::exp(x)).collect();
    let g = pw.v.tr_matmul(&pw.v);
    let g2 = g.matmul(&g);
    let k = 2.0 * math::sqrt(1.0 - pw.c);
    let dsg = Matrix::from_fn(n, n, |i, j| e[i] * pw.s[(i, j)]).matmul(&g);
    let w = Matrix::from_fn(n, n, |i, j| k * dsg[(i, j)] - e[i] * e[i] * g2[(i, j)]);
    let q = Matrix::from_diag(&e.iter().map(|x| 1.0 / (x * x)).collect::<Vec<_>>());
    Ok(Parameterized { w, p: g2, q })
}

/// `S = X(I + XᵀX)^{−1/2}`, `VᵀV = (YᵀY + εI)^{1/2}` with `V` its symmetric root.
pub fn free_to_constrained(fw: &FreeWeights) -> Result<ParamWeights, DeqError> {
    check_rate(fw.c)?;
    let n = fw.d.len();
    if fw.x.shape() != (n, n) || fw.y.shape() != (n, n) {
        return Err(DeqError::InvalidInput(format!("X and Y must be {n}×{n}")));
    }
    if !(fw.eps > 0.0) {
        return Err(DeqError::InvalidInput(format!("regularization ε = {} must be positive", fw.eps)));
    }
    let gram = &Matrix::identity(n) + &fw.x.tr_matmul(&fw.x);
    let s = fw.x.matmul(&inv_sqrtm_pd(&gram)?);
    let vtv = sqrtm_psd(&(&fw.y.tr_matmul(&fw.y) + &Matrix::identity(n).scale(fw.eps)))?;
    let v = sqrtm_psd(&vtv)?;
    Ok(ParamWeights { d: fw.d.clone(), s, v, c: fw.c })
}

pub fn parameterize_free(fw: &FreeWeights) -> Result<Parameterized, DeqError> {
    parameterize_weight(&free_to_constrained(fw)?)
}

/// Recovers `S = Q^{−1/2}(P + QW)P^{−1/2} / (2√(1−c))` from a certified weight.
pub fn reconstruct_s(w: &Matrix, p: &Matrix, q: &Matrix, c: f64) -> Result<Matrix, DeqError> {
    if !(0.0..1.0).contains(&c) {
        return Err(DeqError::InvalidInput(format!("rate c = {c} must lie in [0, 1)")));
    }
    let inner = p + &q.matmul(w);
    let s = inv_sqrtm_pd(q)?.matmul(&inner).matmul(&inv_sqrtm_pd(p)?);
    Ok(s.scale(1.0 / (2.0 * math::sqrt(1.0 - c))))
}

/// `λ_max(SᵀS) − 1`; nonpositive for a contraction.
pub fn contraction_defect(s: &Matrix) -> Result<f64, DeqError> {
    Ok(max_eig(&s.tr_matmul(s))? - 1.0)
}

/// Affine map `z ↦ Az + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Affine {
    pub a: Matrix,
    pub b: Vec<f64>,
}

/// Composition of affine layers with a monotone 1-Lipschitz activation
/// between consecutive layers.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerStack {
    pub layers: Vec<Affine>,
    pub activation: Activation,
}

impl LayerStack {
    pub fn new(layers: Vec<Affine>, activation: Activation) -> Result<Self, DeqError> {
        if layers.is_empty() {
            return Err(DeqError::InvalidInput("layer stack is empty".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.b.len() != l.a.rows() {
                return Err(DeqError::InvalidInput(format!("layer {i}: bias length {} ≠ {}", l.b.len(), l.a.rows())));
            }
            if i > 0 && layers[i - 1].a.rows() != l.a.cols() {
                return Err(DeqError::InvalidInput(format!("layer {i}: input width {} ≠ {}", l.a.cols(), layers[i - 1].a.rows())));
            }
        }
        let (lo, hi) = activation.slope_bounds();
        if lo < 0.0 || hi > 1.0 {
            return Err(DeqError::InvalidInput("activation must be monotone and 1-Lipschitz".into()));
        }
        Ok(Self { layers, activation })
    }

    /// Constant map `u ↦ v`.
    pub fn constant(input_dim: usize, v: Vec<f64>) -> Self {
        let a = Matrix::zeros(v.len(), input_dim);
        Self { layers: vec![Affine { a, b: v }], activation: Activation::Identity }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].a.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].a.rows()
    }

    pub fn eval(&self, u: &[f64]) -> Vec<f64> {
        let last = self.layers.len() - 1;
        let mut z = u.to_vec();
        for (i, l) in self.layers.iter().enumerate() {
            z = l.a.mul_vec(&z).iter().zip(&l.b).map(|(a, b)| a + b).collect();
            if i < last {
                z = self.activation.apply_vec(&z);
            }
        }
        z
    }

    /// Product of layer spectral norms.
    pub fn lipschitz(&self) -> Result<f64, DeqError> {
        let mut l = 1.0;
        for layer in &self.layers {
            if layer.a.rows() == 0 || layer.a.cols() == 0 {
                return Ok(0.0);
            }
            l *= sigma_max(&layer.a)?;
        }
        Ok(l)
    }

    /// Bound on `‖h(u)‖₂` over `‖u‖₂ ≤ radius`.
    pub fn output_bound(&self, radius: f64) -> Result<f64, DeqError> {
        Ok(norm2(&self.eval(&vec![0.0; self.input_dim()])) + self.lipschitz()? * radius)
    }
}

/// Implicit layer `x = Ψ(W(u)x + B(u))` with weights produced by layer stacks.
#[derive(Clone, Debug, PartialEq)]
pub struct DeqSpec {
    pub n: usize,
    pub c: f64,
    pub eps: f64,
    pub activation: Activation,
    /// Inputs are confined to the ball `‖u‖₂ ≤ input_radius`.
    pub input_radius: f64,
    pub d_map: LayerStack,
    /// Row-major entries of `X(u)`.
    pub x_map: LayerStack,
    /// Row-major entries of `Y(u)`.
    pub y_map: LayerStack,
    pub b_map: LayerStack,
}

/// Sound Lipschitz constants of `u ↦ W(u)` and `u ↦ B(u)` on the input ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeqLipschitz {
    pub ell_w: f64,
    pub ell_b: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeqOutput {
    pub x: Vec<f64>,
    pub w: Matrix,
    pub q: Matrix,
    pub bias: Vec<f64>,
    /// `λ_min(2Q − QW − WᵀQ)/2`.
    pub delta: f64,
    pub iterations: usize,
}

impl DeqSpec {
    pub fn validate(&self) -> Result<(), DeqError> {
        check_rate(self.c)?;
        if self.c <= 0.0 || self.c >= 1.0 {
            return Err(DeqError::InvalidInput(format!("implicit layers need c in (0, 1), got {}", self.c)));
        }
        if !(self.eps > 0.0) || !(self.input_radius >= 0.0) {
            return Err(DeqError::InvalidInput("ε must be positive and the input radius nonnegative".into()));
        }
        let (lo, hi) = self.activation.slope_bounds();
        if lo < 0.0 || hi > 1.0 {
            return Err(DeqError::InvalidInput("layer activation must be monotone and 1-Lipschitz".into()));
        }
        let k = self.d_map.input_dim();
        let n = self.n;
        for (name, m, want) in [
            ("d", &self.d_map, n),
            ("X", &self.x_map, n * n),
            ("Y", &self.y_map, n * n),
            ("B", &self.b_map, n),
        ] {
            if m.input_dim() != k || m.output_dim() != want {
                return Err(DeqError::InvalidInput(format!(
                    "{name} map: expected {k} → {want}, found {} → {}",
                    m.input_dim(),
                    m.output_dim()
                )));
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.d_map.input_dim()
    }

    pub fn free_weights(&self, u: &[f64]) -> Result<FreeWeights, DeqError> {
        if u.len() != self.input_dim() {
            return Err(DeqError::InvalidInput(format!("input has length {}, expected {}", u.len(), self.input_dim())));
        }
        let n = self.n;
        Ok(FreeWeights {
            d: self.d_map.eval(u),
            x: Matrix::from_row_major(n, n, self.x_map.eval(u))?,
            y: Matrix::from_row_major(n, n, self.y_map.eval(u))?,
            c: self.c,
            eps: self.eps,
        })
    }

    /// Lipschitz constants on `‖u‖ ≤ input_radius`.
    ///
    /// `S(X)` is 1-Lipschitz in Frobenius norm; `e^d` and `(VᵀV)²` are bounded
    /// through the output bounds of the layer stacks; the square root is
    /// `1/(2√ε)`-Lipschitz above `εI`.
    pub fn lipschitz(&self) -> Result<DeqLipschitz, DeqError> {
        let r = self.input_radius;
        let (l_d, l_x, l_y) = (self.d_map.lipschitz()?, self.x_map.lipschitz()?, self.y_map.lipschitz()?);
        let m_d = self.d_map.output_bound(r)?;
        let m_y = self.y_map.output_bound(r)?;
        let k = 2.0 * math::sqrt(1.0 - self.c);
        let e1 = math::exp(m_d);
        let e2 = e1 * e1;
        let g_max = math::sqrt(m_y * m_y + self.eps);
        let g2_max = m_y * m_y + self.eps;
        let dg2 = 2.0 * m_y * l_y;
        let dg = dg2 / (2.0 * math::sqrt(self.eps));
        let ell_w = k * (e1 * l_d * g_max + e1 * l_x * g_max + e1 * dg) + 2.0 * e2 * l_d * g2_max + e2 * dg2;
        Ok(DeqLipschitz { ell_w, ell_b: self.b_map.lipschitz()? })
    }

    fn check_ball(&self, u: &[f64]) -> Result<(), DeqError> {
        let r = norm2(u);
        if r > self.input_radius * (1.0 + 1e-12) {
            return Err(DeqError::InvalidInput(format!("‖u‖ = {r} exceeds the input radius {}", self.input_radius)));
        }
        Ok(())
    }
}

/// Weights, bias and contraction margin of the layer at `u`.
pub fn deq_instance(spec: &DeqSpec, u: &[f64]) -> Result<(Parameterized, Vec<f64>, f64), DeqError> {
    spec.validate()?;
    let par = parameterize_free(&spec.free_weights(u)?)?;
    let qw = par.q.matmul(&par.w);
    let m = &(&par.q.scale(2.0) - &qw) - &qw.transpose();
    let delta = 0.5 * min_eig(&m)?;
    Ok((par, spec.b_map.eval(u), delta))
}

/// Fixed point of `x = Ψ(W(u)x + B(u))` started at `x0`.
///
/// Damped iteration `x ← x + h(Ψ(Wx + B) − x)`; the step shrinks until the
/// iteration converges.
pub fn deq_forward_from(spec: &DeqSpec, u: &[f64], x0: &[f64], tol: f64) -> Result<DeqOutput, DeqError> {
    let (par, bias, delta) = deq_instance(spec, u)?;
    if x0.len() != spec.n {
        return Err(DeqError::InvalidInput(format!("x0 has length {}, expected {}", x0.len(), spec.n)));
    }
    let act = spec.activation;
    let map = |x: &[f64]| -> Vec<f64> {
        act.apply_vec(&par.w.mul_vec(x).iter().zip(&bias).map(|(a, b)| a + b).collect::<Vec<_>>())
    };
    let opts = FixedPointOptions { tol, damping: 0.2, max_iter: 500_000 };
    let (x, iterations) = fixed_point_backoff(map, x0, &opts, 5)?;
    Ok(DeqOutput { x, w: par.w, q: par.q, bias, delta, iterations })
}

pub fn deq_forward(spec: &DeqSpec, u: &[f64], tol: f64) -> Result<DeqOutput, DeqError> {
    deq_forward_from(spec, u, &vec![0.0; spec.n], tol)
}

/// Result of comparing `‖x*(u) − x*(u')‖` with its a priori bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LipschitzSample {
    pub gap: f64,
    pub bound: f64,
}

impl LipschitzSample {
    pub fn holds(&self) -> bool {
        self.gap <= self.bound * (1.0 + 1e-9) + 1e-12
    }
}

/// `‖x*(u) − x*(u')‖ ≤ (‖Q‖/δ)(ℓ_W‖x*(u')‖ + ℓ_B)‖u − u'‖` with `δ` and `‖Q‖`
/// taken as the worse of the two instances.
pub fn lipschitz_bound_check(spec: &DeqSpec, u: &[f64], u2: &[f64], tol: f64) -> Result<LipschitzSample, DeqError> {
    spec.check_ball(u)?;
    spec.check_ball(u2)?;
    let l = spec.lipschitz()?;
    let a = deq_forward(spec, u, tol)?;
    let b = deq_forward(spec, u2, tol)?;
    let delta = a.delta.min(b.delta);
    if !(delta > 0.0) {
        return Err(DeqError::Cert(CertError::Verification { margin: delta }));
    }
    let q_norm = max_eig(&a.q)?.max(max_eig(&b.q)?);
    let du = norm2(&sub_vec(u, u2));
    let bound = q_norm / delta * (l.ell_w * norm2(&b.x) + l.ell_b) * du;
    Ok(LipschitzSample { gap: norm2(&sub_vec(&a.x, &b.x)), bound })
}

/// Certificate margin of a parameterized weight at its own `(P, Q)`.
pub fn parameterized_margin(par: &Parameterized, c: f64) -> Result<f64, DeqError> {
    Ok(certificate_margin(&par.w, &CertificateSpec::fr_cts_mone(c), &par.p, &par.q)?)
}
