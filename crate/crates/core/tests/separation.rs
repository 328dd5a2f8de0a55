//! Observer and state error bounds under bias mismatch and a moving bias.

mod common;

use common::{gaussian, gaussian_vec, rng};
use crnn_core::certificates::{ModelKind, TimeDomain};
use crnn_core::linalg::{sigma_max, Matrix};
use crnn_core::lmi::SolveOptions;
use crnn_core::sim::{
    check_separation_bounds, separation_constants, simulate_closed_loop_with, Activation, PiecewiseConstant, Scenario,
    SimConfig, SynapticModel,
};
use crnn_core::synthesis::{synth_observer, synth_state_feedback, GainSet};

/// First seed from 2024 on whose plant admits both designs.
fn setup() -> (SynapticModel, GainSet) {
    (2024..).find_map(try_setup).unwrap()
}

fn try_setup(seed: u64) -> Option<(SynapticModel, GainSet)> {
    let mut r = rng(seed);
    let n = 6;
    let s = 1.0 / (n as f64).sqrt();
    let w = gaussian(&mut r, n, n, 1.2 * s);
    let b = gaussian(&mut r, n, 2, s);
    let c = gaussian(&mut r, 2, n, s);
    let plant = SynapticModel::new(
        ModelKind::FiringRate,
        TimeDomain::Continuous,
        w.clone(),
        b.clone(),
        c.clone(),
        Matrix::zeros(2, 2),
        Activation::Tanh,
    )
    .unwrap();
    let opts = SolveOptions::default();
    let (c_k, c_o) = (0.2, 0.3);
    let fb = synth_state_feedback(&w, &b, c_k, &opts).ok()?;
    let obs = synth_observer(&w, &c, c_o, &opts).ok()?;
    let g = GainSet {
        k_f: fb.k.clone(),
        l: obs.l.clone(),
        k_i: Matrix::zeros(2, 2),
        epsilon: 0.0,
        c_k,
        c_o,
        c_r: 1.0,
        p_x: fb.p().unwrap(),
        p_o: obs.p.matrix().clone(),
        p_r: Matrix::identity(2),
    };
    Some((plant, g))
}

fn run(scenario: &Scenario, seed: u64) {
    let (plant, g) = setup();
    let k = separation_constants(&plant, &g).unwrap();
    let w_cl = &plant.w + &plant.b.matmul(&g.k_f);
    let w_o = &plant.w - &g.l.matmul(&plant.c);
    let dt = 0.02 / sigma_max(&w_cl).unwrap().max(sigma_max(&w_o).unwrap()).max(1.0);
    let horizon = 30.0;
    let cfg = SimConfig::new(horizon, dt).every(((horizon / dt) as usize / 600).max(1));
    let mut r = rng(seed);
    let n = plant.n();
    for _ in 0..5 {
        let x0 = gaussian_vec(&mut r, n, 1.0);
        let xi0 = gaussian_vec(&mut r, n, 1.0);
        let u0 = gaussian_vec(&mut r, 2, 0.5);
        let reference = PiecewiseConstant::constant(vec![0.0; 2]);
        let traj = simulate_closed_loop_with(&plant, &g, &reference, scenario, &x0, &xi0, &u0, &cfg).unwrap();
        assert!(!traj.diverged);
        let rep = check_separation_bounds(&traj, &plant, &g, scenario, &k, 5e-2).unwrap();
        assert!(rep.passed(), "{:?}", rep.first_violation);
        assert!(rep.samples > 500);
    }
}

#[test]
fn nominal_bounds_hold() {
    run(&Scenario::Nominal, 1);
}

#[test]
fn bias_mismatch_bounds_hold() {
    let mut r = rng(5);
    let theta = gaussian_vec(&mut r, 6, 0.3);
    let theta_hat: Vec<f64> = theta.iter().zip(gaussian_vec(&mut r, 6, 0.1)).map(|(a, b)| a + b).collect();
    run(&Scenario::ModelError { theta, theta_hat }, 2);
}

#[test]
fn moving_bias_bounds_hold() {
    let mut r = rng(6);
    let scenario = Scenario::Moving { theta0: gaussian_vec(&mut r, 6, 0.2), amplitude: gaussian_vec(&mut r, 6, 0.2), omega: 0.7 };
    run(&scenario, 3);
}
