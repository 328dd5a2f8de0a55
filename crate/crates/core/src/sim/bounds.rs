use alloc::vec::Vec;

use super::{closed_loop_equilibrium, FixedPointOptions, Scenario, SimError, SynapticModel, Trajectory};
use crate::linalg::{induced_norm, sub_vec, weighted_norm, Matrix};
use crate::math;
use crate::synthesis::{input_gain, GainSet};

/// `∫₀ᵗ e^{−c_K(t−s)} e^{−c_O s} ds`.
pub fn beta(t: f64, c_k: f64, c_o: f64) -> f64 {
    let d = c_k - c_o;
    if math::abs(d) < 1e-8 {
        return t * math::exp(-c_k * t);
    }
    // e^{−c_O t}·(1 − e^{−d t})/d, stable for small d.
    -math::exp(-c_o * t) * math::expm1(-d * t) / d
}

/// Lipschitz constants entering the error bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparationConstants {
    pub ell_u: f64,
    pub ell_k: f64,
    /// Observer sensitivity to the bias estimate, Euclidean to `‖·‖_O`.
    pub ell_l_theta: f64,
    pub ell_k_theta: f64,
    /// Plant sensitivity to the bias, Euclidean to `‖·‖_X`.
    pub ell_f_theta: f64,
}

/// Constants for a firing-rate plant with bias-type parameters. The input
/// space carries the weight `P_R` of the gain set.
pub fn separation_constants(plant: &SynapticModel, g: &GainSet) -> Result<SeparationConstants, SimError> {
    let n = plant.n();
    let wrap = |e: crate::certificates::CertError| SimError::InvalidInput(alloc::format!("{e}"));
    let i_n = Matrix::identity(n);
    Ok(SeparationConstants {
        ell_u: input_gain(&plant.b, &g.p_x, &g.p_r).map_err(wrap)?,
        ell_k: induced_norm(&g.k_f, &g.p_r, &g.p_o).map_err(|e| wrap(e.into()))?,
        ell_l_theta: input_gain(&i_n, &g.p_o, &i_n).map_err(wrap)?,
        ell_k_theta: 0.0,
        ell_f_theta: input_gain(&i_n, &g.p_x, &i_n).map_err(wrap)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    Observer,
    State,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Violation {
    pub time: f64,
    pub kind: BoundKind,
    pub value: f64,
    pub bound: f64,
}

/// Outcome of a pointwise bound check along a trajectory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundReport {
    pub samples: usize,
    pub violations: usize,
    pub first_violation: Option<Violation>,
    /// Largest `value / bound` seen for each bound (bounds above `1e-12`).
    pub max_ratio_observer: f64,
    pub max_ratio_state: f64,
    /// Per-sample `min(bound·(1+tol) − value)` over both bounds.
    pub residuals: Vec<f64>,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, k: usize) -> f64 {
    let k = if k % 2 == 1 { k + 1 } else { k.max(2) };
    let h = (b - a) / k as f64;
    let mut s = f(a) + f(b);
    for i in 1..k {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Checks the observer and state error bounds pointwise along `traj`.
///
/// The check restarts wherever `u_ext` jumps. Values may exceed the bound
/// by the relative slack `tol` plus an absolute floor of `1e-9·max(1, V(0))`.
pub fn check_separation_bounds(
    traj: &Trajectory,
    plant: &SynapticModel,
    g: &GainSet,
    scenario: &Scenario,
    k: &SeparationConstants,
    tol: f64,
) -> Result<BoundReport, SimError> {
    let n = plant.n();
    if traj.is_empty() || traj.xi.first().map(|v| v.len()) != Some(n) {
        return Err(SimError::InvalidInput("trajectory lacks observer states".into()));
    }
    let eq_opts = FixedPointOptions { tol: 1e-12, ..Default::default() };
    let (c_k, c_o) = (g.c_k, g.c_o);
    let mismatch = scenario.mismatch();
    let drift = k.ell_l_theta * mismatch / c_o;
    let mut report = BoundReport::default();
    let mut start = 0;
    while start < traj.len() {
        let mut end = start + 1;
        while end < traj.len() && traj.uext[end] == traj.uext[start] {
            end += 1;
        }
        let u = &traj.uext[start];
        let t0 = traj.times[start];
        let mut xs = closed_loop_equilibrium(plant, &g.k_f, u, &scenario.plant_bias(t0, n), &traj.x[start], &eq_opts)?;
        let v1_0 = weighted_norm(&sub_vec(&traj.xi[start], &traj.x[start]), &g.p_o);
        let v2_0 = weighted_norm(&sub_vec(&traj.x[start], &xs), &g.p_x);
        let mut integral = 0.0;
        let mut prev_t = t0;
        for i in start..end {
            let t = traj.times[i];
            if matches!(scenario, Scenario::Moving { .. }) && i > start {
                xs = closed_loop_equilibrium(plant, &g.k_f, u, &scenario.plant_bias(t, n), &xs, &eq_opts)?;
                let gap = t - prev_t;
                integral = math::exp(-c_k * gap) * integral
                    + simpson(|s| math::exp(-c_k * (t - s)) * scenario.theta_rate(s), prev_t, t, 16);
            }
            prev_t = t;
            let tau = t - t0;
            let eo = math::exp(-c_o * tau);
            let ek = math::exp(-c_k * tau);
            let b = beta(tau, c_k, c_o);
            let obs_bound = v1_0 * eo + drift * (1.0 - eo);
            let state_bound = v2_0 * ek
                + k.ell_u * k.ell_k * (v1_0 * b + drift * ((1.0 - ek) / c_k - b))
                + k.ell_u * k.ell_k_theta * mismatch * (1.0 - ek) / c_k
                + (k.ell_f_theta + k.ell_u * k.ell_k_theta) / c_k * integral;
            let v1 = weighted_norm(&sub_vec(&traj.xi[i], &traj.x[i]), &g.p_o);
            let v2 = weighted_norm(&sub_vec(&traj.x[i], &xs), &g.p_x);
            let floor_o = 1e-9 * v1_0.max(1.0);
            let floor_s = 1e-9 * v2_0.max(v1_0).max(1.0);
            let slack_o = obs_bound * (1.0 + tol) + floor_o - v1;
            let slack_s = state_bound * (1.0 + tol) + floor_s - v2;
            if obs_bound > 1e-12 {
                report.max_ratio_observer = report.max_ratio_observer.max(v1 / obs_bound);
            }
            if state_bound > 1e-12 {
                report.max_ratio_state = report.max_ratio_state.max(v2 / state_bound);
            }
            report.samples += 1;
            report.residuals.push(slack_o.min(slack_s));
            for (slack, kind, value, bound) in [
                (slack_o, BoundKind::Observer, v1, obs_bound),
                (slack_s, BoundKind::State, v2, state_bound),
            ] {
                if slack < 0.0 {
                    report.violations += 1;
                    if report.first_violation.is_none() {
                        report.first_violation = Some(Violation { time: t, kind, value, bound });
                    }
                }
            }
        }
        start = end;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_examples() {
        assert_eq!(beta(0.0, 1.0, 2.0), 0.0);
        assert!((beta(1.0, 1.0, 1.0) - libm::exp(-1.0)).abs() < 1e-15);
        let want = libm::exp(-1.0) - libm::exp(-2.0);
        assert!((beta(1.0, 2.0, 1.0) - want).abs() < 1e-15);
    }

    #[test]
    fn beta_equal_rate_continuity() {
        for k in 0..=100 {
            let t = k as f64 * 0.1;
            let lim = t * libm::exp(-0.7 * t);
            assert!((beta(t, 0.7, 0.7 + 1e-9) - lim).abs() <= 1e-6);
            assert!((beta(t, 0.7, 0.7 + 2e-8) - lim).abs() <= 1e-6);
        }
    }
}
