use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::SimError;
use crate::certificates::{ActivationClass, ModelKind, TimeDomain};
use crate::linalg::{add_vec, sigma_max, Matrix};
use crate::math;

/// Scalar activation applied elementwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    Tanh,
    /// `4(σ(x) − ½) = 2·tanh(x/2)`, slope in `(0, 1]`.
    SigmoidCentered,
    Relu,
    /// Slope `a` for negative arguments, `a ∈ (0, 1)`.
    LeakyRelu(f64),
    Identity,
    /// Clamp to `[−1, 1]`.
    Saturation,
}

impl Activation {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            Activation::Tanh => math::tanh(x),
            Activation::SigmoidCentered => 2.0 * math::tanh(0.5 * x),
            Activation::Relu => x.max(0.0),
            Activation::LeakyRelu(a) => {
                if x >= 0.0 {
                    x
                } else {
                    a * x
                }
            }
            Activation::Identity => x,
            Activation::Saturation => x.clamp(-1.0, 1.0),
        }
    }

    pub fn apply_vec(&self, v: &[f64]) -> Vec<f64> {
        v.iter().map(|&x| self.apply(x)).collect()
    }

    /// Derivative where it exists; at kinks the right derivative.
    pub fn slope(&self, x: f64) -> f64 {
        match *self {
            Activation::Tanh => {
                let t = math::tanh(x);
                1.0 - t * t
            }
            Activation::SigmoidCentered => {
                let t = math::tanh(0.5 * x);
                1.0 - t * t
            }
            Activation::Relu => {
                if x >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu(a) => {
                if x >= 0.0 {
                    1.0
                } else {
                    a
                }
            }
            Activation::Identity => 1.0,
            Activation::Saturation => {
                if (-1.0..1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Tightest slope interval known for this activation.
    pub fn slope_bounds(&self) -> (f64, f64) {
        match *self {
            Activation::LeakyRelu(a) => (a, 1.0),
            Activation::Identity => (1.0, 1.0),
            _ => (0.0, 1.0),
        }
    }

    pub fn class(&self) -> ActivationClass {
        match *self {
            Activation::LeakyRelu(a) => ActivationClass::Slope(a, 1.0),
            Activation::Identity => ActivationClass::Slope(1.0, 1.0),
            _ => ActivationClass::Mone,
        }
    }

    /// Whether the activation is odd, so that zero input gives a zero equilibrium.
    pub fn is_odd(&self) -> bool {
        matches!(self, Activation::Tanh | Activation::SigmoidCentered | Activation::Identity | Activation::Saturation)
    }

    pub fn name(&self) -> String {
        match *self {
            Activation::Tanh => "tanh".into(),
            Activation::SigmoidCentered => "sigmoid".into(),
            Activation::Relu => "relu".into(),
            Activation::LeakyRelu(a) => format!("leaky-relu:{a}"),
            Activation::Identity => "identity".into(),
            Activation::Saturation => "saturation".into(),
        }
    }

    pub fn parse(tag: &str) -> Result<Self, SimError> {
        let t = tag.trim();
        match t {
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" | "sigmoid-centered" => Ok(Activation::SigmoidCentered),
            "relu" => Ok(Activation::Relu),
            "identity" | "linear" => Ok(Activation::Identity),
            "saturation" | "sat" => Ok(Activation::Saturation),
            _ => {
                if let Some(a) = t.strip_prefix("leaky-relu:") {
                    let a: f64 = a.parse().map_err(|_| SimError::InvalidInput(format!("bad leaky-relu slope in {t:?}")))?;
                    if !(a > 0.0 && a < 1.0) {
                        return Err(SimError::InvalidInput(format!("leaky-relu slope {a} outside (0, 1)")));
                    }
                    Ok(Activation::LeakyRelu(a))
                } else {
                    Err(SimError::InvalidInput(format!("unknown activation {t:?}")))
                }
            }
        }
    }
}

/// A firing-rate or Hopfield network with input and output maps.
#[derive(Clone, Debug, PartialEq)]
pub struct SynapticModel {
    pub kind: ModelKind,
    pub domain: TimeDomain,
    pub w: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub d: Matrix,
    pub activation: Activation,
}

impl SynapticModel {
    pub fn new(
        kind: ModelKind,
        domain: TimeDomain,
        w: Matrix,
        b: Matrix,
        c: Matrix,
        d: Matrix,
        activation: Activation,
    ) -> Result<Self, SimError> {
        let n = w.rows();
        let bad = |name: &str, expect: (usize, usize), got: (usize, usize)| {
            SimError::InvalidInput(format!("{name}: expected shape {expect:?}, found {got:?}"))
        };
        if !w.is_square() || n == 0 {
            return Err(bad("W", (n, n), w.shape()));
        }
        if b.rows() != n {
            return Err(bad("B", (n, b.cols()), b.shape()));
        }
        if c.cols() != n {
            return Err(bad("C", (c.rows(), n), c.shape()));
        }
        if d.shape() != (c.rows(), b.cols()) {
            return Err(bad("D", (c.rows(), b.cols()), d.shape()));
        }
        for (name, m) in [("W", &w), ("B", &b), ("C", &c), ("D", &d)] {
            if !m.is_finite() {
                return Err(SimError::InvalidInput(format!("{name} has non-finite entries")));
            }
        }
        Ok(Self { kind, domain, w, b, c, d, activation })
    }

    /// Continuous firing-rate model with identity output and no feedthrough.
    pub fn firing_rate(w: Matrix, b: Matrix, activation: Activation) -> Result<Self, SimError> {
        let n = w.rows();
        let m = b.cols();
        Self::new(
            ModelKind::FiringRate,
            TimeDomain::Continuous,
            w,
            b,
            Matrix::identity(n),
            Matrix::zeros(n, m),
            activation,
        )
    }

    pub fn n(&self) -> usize {
        self.w.rows()
    }

    pub fn m(&self) -> usize {
        self.b.cols()
    }

    pub fn p(&self) -> usize {
        self.c.rows()
    }

    /// Right-hand side map: `Ψ(Wx + Bu)` (firing rate) or `WΨ(x) + Bu` (Hopfield).
    pub fn map(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let bu = self.b.mul_vec(u);
        match self.kind {
            ModelKind::FiringRate => self.activation.apply_vec(&add_vec(&self.w.mul_vec(x), &bu)),
            ModelKind::Hopfield => add_vec(&self.w.mul_vec(&self.activation.apply_vec(x)), &bu),
        }
    }

    /// Continuous vector field `−x + map(x, u)`.
    pub fn field(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let mut f = self.map(x, u);
        for (fi, xi) in f.iter_mut().zip(x) {
            *fi -= xi;
        }
        f
    }

    /// `y = Cx + Du` (firing rate) or `y = CΨ(x) + Du` (Hopfield).
    pub fn output(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let cx = match self.kind {
            ModelKind::FiringRate => self.c.mul_vec(x),
            ModelKind::Hopfield => self.c.mul_vec(&self.activation.apply_vec(x)),
        };
        add_vec(&cx, &self.d.mul_vec(u))
    }

    /// Default step `10⁻³·min(1, 1/‖W‖₂)`.
    pub fn default_dt(&self) -> f64 {
        let s = sigma_max(&self.w).unwrap_or(1.0);
        1e-3 * if s > 1.0 { 1.0 / s } else { 1.0 }
    }

    pub fn with_weight(&self, w: Matrix) -> Self {
        Self { w, ..self.clone() }
    }
}
