//! Simulation of network dynamics, equilibria and closed loops.

mod bounds;
mod closed_loop;
mod model;

pub use bounds::{
    beta, check_separation_bounds, separation_constants, BoundKind, BoundReport, SeparationConstants, Violation,
};
pub use closed_loop::{closed_loop_equilibrium, closed_loop_field, simulate_closed_loop, simulate_closed_loop_with, Scenario};
pub use model::{Activation, SynapticModel};

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::certificates::TimeDomain;
use crate::linalg::{norm2, sub_vec};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("fixed-point iteration stopped after {iterations} steps with residual {residual:.3e}")]
    NoConvergence { iterations: usize, residual: f64 },
}

/// State norm beyond which a run is declared divergent.
pub const DIVERGENCE_NORM: f64 = 1e9;

/// Integration horizon, step and recording stride.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    pub horizon: f64,
    pub dt: f64,
    /// Record every `record_every`-th step (the last step is always kept).
    pub record_every: usize,
}

impl SimConfig {
    pub fn new(horizon: f64, dt: f64) -> Self {
        Self { horizon, dt, record_every: 1 }
    }

    pub fn every(mut self, k: usize) -> Self {
        self.record_every = k.max(1);
        self
    }

    pub(crate) fn steps(&self) -> Result<usize, SimError> {
        if !(self.dt > 0.0) || !(self.horizon >= 0.0) || !self.dt.is_finite() || !self.horizon.is_finite() {
            return Err(SimError::InvalidInput(format!(
                "need dt > 0 and horizon ≥ 0, got dt = {}, horizon = {}",
                self.dt, self.horizon
            )));
        }
        Ok(crate::math::round(self.horizon / self.dt) as usize)
    }
}

/// Piecewise-constant signal; level `k` holds from `starts[k]` on.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseConstant {
    pub starts: Vec<f64>,
    pub levels: Vec<Vec<f64>>,
}

impl PiecewiseConstant {
    pub fn constant(v: Vec<f64>) -> Self {
        Self { starts: vec![0.0], levels: vec![v] }
    }

    pub fn new(starts: Vec<f64>, levels: Vec<Vec<f64>>) -> Result<Self, SimError> {
        if starts.is_empty() || starts.len() != levels.len() {
            return Err(SimError::InvalidInput("reference needs one start time per level".into()));
        }
        if starts.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(SimError::InvalidInput("reference start times must increase".into()));
        }
        let dim = levels[0].len();
        if levels.iter().any(|l| l.len() != dim) {
            return Err(SimError::InvalidInput("reference levels differ in dimension".into()));
        }
        Ok(Self { starts, levels })
    }

    pub fn dim(&self) -> usize {
        self.levels[0].len()
    }

    pub fn value(&self, t: f64) -> &[f64] {
        let k = self.starts.iter().rposition(|&s| s <= t).unwrap_or(0);
        &self.levels[k]
    }
}

/// Sampled closed-loop or open-loop run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub xi: Vec<Vec<f64>>,
    pub uext: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub diverged: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_x(&self) -> &[f64] {
        self.x.last().map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub(crate) fn push(&mut self, t: f64, x: Vec<f64>, xi: Vec<f64>, uext: Vec<f64>, y: Vec<f64>) {
        self.times.push(t);
        self.x.push(x);
        self.xi.push(xi);
        self.uext.push(uext);
        self.y.push(y);
    }

    /// Delimited text with header `t,x_1..,xi_1..,uext_1..,y_1..`.
    pub fn to_csv(&self) -> String {
        let widths = |v: &Vec<Vec<f64>>| v.first().map(|r| r.len()).unwrap_or(0);
        let (nx, nxi, nu, ny) = (widths(&self.x), widths(&self.xi), widths(&self.uext), widths(&self.y));
        let mut out = String::from("t");
        for (name, k) in [("x", nx), ("xi", nxi), ("uext", nu), ("y", ny)] {
            for i in 1..=k {
                let _ = write!(out, ",{name}_{i}");
            }
        }
        out.push('\n');
        for r in 0..self.len() {
            let _ = write!(out, "{}", self.times[r]);
            for v in [&self.x[r], &self.xi[r], &self.uext[r], &self.y[r]] {
                for e in v {
                    let _ = write!(out, ",{e}");
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Classical fourth-order Runge–Kutta step.
pub fn rk4_step(f: &impl Fn(f64, &[f64]) -> Vec<f64>, t: f64, x: &[f64], h: f64) -> Vec<f64> {
    let k1 = f(t, x);
    let shifted = |k: &[f64], s: f64| x.iter().zip(k).map(|(a, b)| a + s * b).collect::<Vec<_>>();
    let k2 = f(t + 0.5 * h, &shifted(&k1, 0.5 * h));
    let k3 = f(t + 0.5 * h, &shifted(&k2, 0.5 * h));
    let k4 = f(t + h, &shifted(&k3, h));
    (0..x.len()).map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
}

fn diverged(x: &[f64]) -> bool {
    x.iter().any(|v| !v.is_finite()) || norm2(x) > DIVERGENCE_NORM
}

/// Open-loop run of `model` under input `u(t)`.
///
/// Continuous models use fixed-step RK4; discrete models iterate
/// `⌊horizon⌋` times and ignore `dt`.
pub fn simulate(
    model: &SynapticModel,
    u: &dyn Fn(f64) -> Vec<f64>,
    x0: &[f64],
    cfg: &SimConfig,
) -> Result<Trajectory, SimError> {
    if x0.len() != model.n() {
        return Err(SimError::InvalidInput(format!("x0 has length {}, expected {}", x0.len(), model.n())));
    }
    let input = |t: f64| -> Result<Vec<f64>, SimError> {
        let v = u(t);
        if v.len() != model.m() {
            return Err(SimError::InvalidInput(format!("input has length {}, expected {}", v.len(), model.m())));
        }
        Ok(v)
    };
    let mut traj = Trajectory::default();
    let mut x = x0.to_vec();
    let u0 = input(0.0)?;
    traj.push(0.0, x.clone(), vec![], vec![], model.output(&x, &u0));
    let (steps, h) = match model.domain {
        TimeDomain::Continuous => (cfg.steps()?, cfg.dt),
        TimeDomain::Discrete => (cfg.horizon.max(0.0) as usize, 1.0),
    };
    let every = cfg.record_every.max(1);
    for k in 0..steps {
        let t = k as f64 * h;
        x = match model.domain {
            TimeDomain::Continuous => {
                // Inputs are validated at step starts; RK4 stages reuse the same signal.
                input(t)?;
                rk4_step(&|s: f64, z: &[f64]| model.field(z, &u(s)), t, &x, h)
            }
            TimeDomain::Discrete => model.map(&x, &input(t)?),
        };
        let t1 = (k + 1) as f64 * h;
        let stop = diverged(&x);
        if (k + 1) % every == 0 || k + 1 == steps || stop {
            let y = model.output(&x, &u(t1));
            traj.push(t1, x.clone(), vec![], vec![], y);
        }
        if stop {
            traj.diverged = true;
            break;
        }
    }
    Ok(traj)
}

const STALL_WINDOW: usize = 1000;

/// Options for damped fixed-point iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPointOptions {
    pub tol: f64,
    /// Damping `h` in `x ← (1 − h)x + h·map(x)`.
    pub damping: f64,
    pub max_iter: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self { tol: 1e-10, damping: 0.2, max_iter: 500_000 }
    }
}

/// Damped fixed-point iteration of `map` from `x0` until `‖map(x) − x‖₂ ≤ tol`.
pub fn fixed_point(
    map: impl Fn(&[f64]) -> Vec<f64>,
    x0: &[f64],
    opts: &FixedPointOptions,
) -> Result<(Vec<f64>, usize), SimError> {
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(SimError::InvalidInput(format!("damping {} outside (0, 1]", opts.damping)));
    }
    let mut x = x0.to_vec();
    let mut residual = f64::INFINITY;
    let mut checkpoint = f64::INFINITY;
    for it in 0..opts.max_iter {
        let fx = map(&x);
        let d = sub_vec(&fx, &x);
        residual = norm2(&d);
        if residual <= opts.tol {
            return Ok((x, it));
        }
        if !residual.is_finite() || norm2(&x) > DIVERGENCE_NORM {
            return Err(SimError::NoConvergence { iterations: it, residual });
        }
        // A stalled residual means the damped map cycles instead of contracting.
        if it % STALL_WINDOW == 0 {
            if residual > (1.0 - 1e-4) * checkpoint {
                return Err(SimError::NoConvergence { iterations: it, residual });
            }
            checkpoint = residual;
        }
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += opts.damping * di;
        }
    }
    Err(SimError::NoConvergence { iterations: opts.max_iter, residual })
}

/// [`fixed_point`] with the damping quartered after each failure, up to
/// `retries` extra attempts. Contracting flows converge once `h` is small
/// enough, but the admissible `h` shrinks as the weights grow.
pub fn fixed_point_backoff(
    map: impl Fn(&[f64]) -> Vec<f64>,
    x0: &[f64],
    opts: &FixedPointOptions,
    retries: usize,
) -> Result<(Vec<f64>, usize), SimError> {
    let mut o = *opts;
    let mut out = fixed_point(&map, x0, &o);
    for _ in 0..retries {
        if out.is_ok() || matches!(out, Err(SimError::InvalidInput(_))) {
            break;
        }
        o.damping *= 0.25;
        out = fixed_point(&map, x0, &o);
    }
    out
}

/// Equilibrium `x* = map(x*, u)` of a model under constant input.
pub fn equilibrium(model: &SynapticModel, u: &[f64], opts: &FixedPointOptions) -> Result<Vec<f64>, SimError> {
    equilibrium_from(model, u, &vec![0.0; model.n()], opts)
}

pub fn equilibrium_from(
    model: &SynapticModel,
    u: &[f64],
    x0: &[f64],
    opts: &FixedPointOptions,
) -> Result<Vec<f64>, SimError> {
    if u.len() != model.m() || x0.len() != model.n() {
        return Err(SimError::InvalidInput(format!(
            "equilibrium needs u of length {} and x0 of length {}",
            model.m(),
            model.n()
        )));
    }
    fixed_point_backoff(|x| model.map(x, u), x0, opts, 5).map(|(x, _)| x)
}
