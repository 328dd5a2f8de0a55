use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{diverged, fixed_point_backoff, rk4_step, FixedPointOptions, PiecewiseConstant, SimConfig, SimError, SynapticModel, Trajectory};
use crate::certificates::{ModelKind, TimeDomain};
use crate::linalg::{add_vec, norm2, sub_vec, Matrix};
use crate::math;
use crate::synthesis::GainSet;

/// Additive bias inside the activation of plant and observer.
///
/// The plant runs `Ψ(Wx + Bu + θ)`, the observer `Ψ(Wξ + Bu + L(y − ŷ) + θ̂)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Scenario {
    Nominal,
    /// Constant true bias `θ`, observer uses the estimate `θ̂`.
    ModelError { theta: Vec<f64>, theta_hat: Vec<f64> },
    /// Known moving bias `θ(t) = θ₀ + a ⊙ sin(ωt)` used by both.
    Moving { theta0: Vec<f64>, amplitude: Vec<f64>, omega: f64 },
}

impl Scenario {
    pub fn plant_bias(&self, t: f64, n: usize) -> Vec<f64> {
        match self {
            Scenario::Nominal => vec![0.0; n],
            Scenario::ModelError { theta, .. } => theta.clone(),
            Scenario::Moving { theta0, amplitude, omega } => {
                let s = math::sin(omega * t);
                theta0.iter().zip(amplitude).map(|(a, b)| a + b * s).collect()
            }
        }
    }

    pub fn observer_bias(&self, t: f64, n: usize) -> Vec<f64> {
        match self {
            Scenario::ModelError { theta_hat, .. } => theta_hat.clone(),
            _ => self.plant_bias(t, n),
        }
    }

    /// `‖θ̇(t)‖₂`.
    pub fn theta_rate(&self, t: f64) -> f64 {
        match self {
            Scenario::Moving { amplitude, omega, .. } => {
                let c = omega * math::cos(omega * t);
                norm2(&amplitude.iter().map(|a| a * c).collect::<Vec<_>>())
            }
            _ => 0.0,
        }
    }

    /// `‖θ̂ − θ‖₂`.
    pub fn mismatch(&self) -> f64 {
        match self {
            Scenario::ModelError { theta, theta_hat } => norm2(&sub_vec(theta_hat, theta)),
            _ => 0.0,
        }
    }

    fn check(&self, n: usize) -> Result<(), SimError> {
        let ok = match self {
            Scenario::Nominal => true,
            Scenario::ModelError { theta, theta_hat } => theta.len() == n && theta_hat.len() == n,
            Scenario::Moving { theta0, amplitude, omega } => {
                theta0.len() == n && amplitude.len() == n && omega.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(SimError::InvalidInput(format!("scenario vectors must have length {n}")))
        }
    }
}

fn check_gains(plant: &SynapticModel, g: &GainSet) -> Result<(), SimError> {
    let (n, m, p) = (plant.n(), plant.m(), plant.p());
    if plant.kind != ModelKind::FiringRate || plant.domain != TimeDomain::Continuous {
        return Err(SimError::InvalidInput("closed loops are defined for continuous firing-rate plants".into()));
    }
    let shapes = [
        ("K_f", g.k_f.shape(), (m, n)),
        ("L", g.l.shape(), (n, p)),
        ("K_i", g.k_i.shape(), (m, p)),
    ];
    for (name, got, want) in shapes {
        if got != want {
            return Err(SimError::InvalidInput(format!("{name}: expected shape {want:?}, found {got:?}")));
        }
    }
    if !(g.epsilon >= 0.0) || !g.epsilon.is_finite() {
        return Err(SimError::InvalidInput(format!("epsilon {} must be finite and ≥ 0", g.epsilon)));
    }
    Ok(())
}

/// Joint vector field of plant, observer and integrator at stacked state
/// `z = (x, ξ, u_ext)`.
pub fn closed_loop_field(
    plant: &SynapticModel,
    g: &GainSet,
    r: &[f64],
    scenario: &Scenario,
    t: f64,
    z: &[f64],
) -> Vec<f64> {
    let (n, m) = (plant.n(), plant.m());
    let (x, rest) = z.split_at(n);
    let (xi, uext) = rest.split_at(n);
    let psi = |v: Vec<f64>| plant.activation.apply_vec(&v);
    let u = add_vec(&g.k_f.mul_vec(xi), uext);
    let bu = plant.b.mul_vec(&u);
    let y = plant.output(x, &u);
    let yhat = plant.output(xi, &u);
    let fx = psi(add_vec(&add_vec(&plant.w.mul_vec(x), &bu), &scenario.plant_bias(t, n)));
    let inj = g.l.mul_vec(&sub_vec(&y, &yhat));
    let fxi = psi(add_vec(
        &add_vec(&add_vec(&plant.w.mul_vec(xi), &bu), &inj),
        &scenario.observer_bias(t, n),
    ));
    let err = sub_vec(r, &y);
    let du = g.k_i.mul_vec(&err);
    let mut out = Vec::with_capacity(2 * n + m);
    out.extend(fx.iter().zip(x).map(|(a, b)| a - b));
    out.extend(fxi.iter().zip(xi).map(|(a, b)| a - b));
    out.extend(du.iter().map(|d| g.epsilon * d));
    out
}

/// Tracking loop with plant, observer and integral controller.
#[allow(clippy::too_many_arguments)]
pub fn simulate_closed_loop(
    plant: &SynapticModel,
    gains: &GainSet,
    reference: &PiecewiseConstant,
    x0: &[f64],
    xi0: &[f64],
    u0: &[f64],
    cfg: &SimConfig,
) -> Result<Trajectory, SimError> {
    simulate_closed_loop_with(plant, gains, reference, &Scenario::Nominal, x0, xi0, u0, cfg)
}

#[allow(clippy::too_many_arguments)]
pub fn simulate_closed_loop_with(
    plant: &SynapticModel,
    gains: &GainSet,
    reference: &PiecewiseConstant,
    scenario: &Scenario,
    x0: &[f64],
    xi0: &[f64],
    u0: &[f64],
    cfg: &SimConfig,
) -> Result<Trajectory, SimError> {
    check_gains(plant, gains)?;
    scenario.check(plant.n())?;
    let (n, m, p) = (plant.n(), plant.m(), plant.p());
    if x0.len() != n || xi0.len() != n || u0.len() != m || reference.dim() != p {
        return Err(SimError::InvalidInput(format!(
            "initial state sizes must be (x: {n}, xi: {n}, uext: {m}) and reference {p}"
        )));
    }
    let steps = cfg.steps()?;
    let every = cfg.record_every.max(1);
    let mut z: Vec<f64> = x0.iter().chain(xi0).chain(u0).copied().collect();
    let mut traj = Trajectory::default();
    let record = |traj: &mut Trajectory, t: f64, z: &[f64]| {
        let (x, rest) = z.split_at(n);
        let (xi, uext) = rest.split_at(n);
        let u = add_vec(&gains.k_f.mul_vec(xi), uext);
        traj.push(t, x.to_vec(), xi.to_vec(), uext.to_vec(), plant.output(x, &u));
    };
    record(&mut traj, 0.0, &z);
    for k in 0..steps {
        let t = k as f64 * cfg.dt;
        let f = |s: f64, v: &[f64]| closed_loop_field(plant, gains, reference.value(s), scenario, s, v);
        z = rk4_step(&f, t, &z, cfg.dt);
        let stop = diverged(&z);
        if (k + 1) % every == 0 || k + 1 == steps || stop {
            record(&mut traj, (k + 1) as f64 * cfg.dt, &z);
        }
        if stop {
            traj.diverged = true;
            break;
        }
    }
    Ok(traj)
}

/// Equilibrium `x*` of `ẋ = −x + Ψ((W + BK_f)x + Bu + θ)`.
pub fn closed_loop_equilibrium(
    plant: &SynapticModel,
    k_f: &Matrix,
    u: &[f64],
    bias: &[f64],
    x0: &[f64],
    opts: &FixedPointOptions,
) -> Result<Vec<f64>, SimError> {
    let w_cl = &plant.w + &plant.b.matmul(k_f);
    let drive = add_vec(&plant.b.mul_vec(u), bias);
    fixed_point_backoff(|x| plant.activation.apply_vec(&add_vec(&w_cl.mul_vec(x), &drive)), x0, opts, 5).map(|(x, _)| x)
}
