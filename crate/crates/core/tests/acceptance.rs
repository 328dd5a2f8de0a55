//! End-to-end acceptance checks. Run with `cargo test --test acceptance`;
//! pass criterion numbers (e.g. `-- 3 7`) to run a subset.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use crnn_core::certificates::*;
use crnn_core::deq::*;
use crnn_core::linalg::*;
use crnn_core::lmi::SolveOptions;
use crnn_core::networks::*;
use crnn_core::sim::*;
use crnn_core::synthesis::*;
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Check,
}

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let all = [
        Criterion { id: 1, name: "skew counterexample", limit: Duration::from_secs(5), run: c1_skew },
        Criterion { id: 2, name: "symmetric sharpness", limit: Duration::from_secs(60), run: c2_symmetric },
        Criterion { id: 3, name: "structural relationships", limit: Duration::from_secs(300), run: c3_structure },
        Criterion { id: 4, name: "diagonal Schur equivalence", limit: Duration::from_secs(120), run: c4_schur },
        Criterion { id: 5, name: "parameterization round-trip", limit: Duration::from_secs(120), run: c5_param },
        Criterion { id: 6, name: "contraction decay", limit: Duration::from_secs(120), run: c6_decay },
        Criterion { id: 7, name: "separation bounds", limit: Duration::from_secs(180), run: c7_separation },
        Criterion { id: 8, name: "reference tracking", limit: Duration::from_secs(120), run: c8_tracking },
        Criterion { id: 9, name: "graph certificate equivalence", limit: Duration::from_secs(120), run: c9_graph },
        Criterion { id: 10, name: "interconnection necessity", limit: Duration::from_secs(120), run: c10_interconnect },
        Criterion { id: 11, name: "implicit-layer Lipschitz bound", limit: Duration::from_secs(120), run: c11_deq },
        Criterion { id: 12, name: "epsilon-bound consistency", limit: Duration::from_secs(10), run: c12_epsilon },
    ];
    let mut failed = 0;
    for c in all.iter().filter(|c| selected.is_empty() || selected.contains(&c.id)) {
        let t0 = Instant::now();
        let out = (c.run)();
        let dt = t0.elapsed();
        let (ok, detail) = match out {
            Ok(d) if dt <= c.limit => (true, d),
            Ok(d) => (false, format!("{d}; over time limit {:?}", c.limit)),
            Err(e) => (false, e),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<32} {} in {:>7.2}s  {}",
            c.id,
            c.name,
            if ok { "PASS" } else { "FAIL" },
            dt.as_secs_f64(),
            detail
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}

fn spec(model: ModelKind, domain: TimeDomain, nonlin: ActivationClass, rate: f64) -> CertificateSpec {
    CertificateSpec::new(model, domain, nonlin, rate)
}

const CELLS: [(ModelKind, TimeDomain); 4] = [
    (ModelKind::FiringRate, TimeDomain::Continuous),
    (ModelKind::Hopfield, TimeDomain::Continuous),
    (ModelKind::FiringRate, TimeDomain::Discrete),
    (ModelKind::Hopfield, TimeDomain::Discrete),
];

fn c1_skew() -> Check {
    let w = Matrix::from_rows(&[[0.0, 4.0], [-4.0, 0.0]]);
    let opts = SolveOptions::default();
    for c in [0.01, 0.1, 0.5] {
        match certify(&w, &CertificateSpec::fr_cts_mone(c), &opts) {
            Err(CertError::Infeasible { .. }) => {}
            other => return Err(format!("c = {c}: expected infeasible, got {other:?}")),
        }
    }
    let q = lds_check(&w, &opts).map_err(err)?;
    let dev = q.entries().iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    ensure(dev <= 1e-6, || format!("LDS weight {:?} differs from I by {dev:.2e}", q.entries()))?;
    Ok(format!("infeasible at c ∈ {{0.01, 0.1, 0.5}}; LDS Q = I (dev {dev:.1e})"))
}

fn c2_symmetric() -> Check {
    let mut r = rng(2);
    let opts = SolveOptions::default();
    let mut worst_gap: f64 = 0.0;
    let mut worst_margin = f64::INFINITY;
    for k in 0..20 {
        let n = 2 + k % 4;
        let alpha = uniform(&mut r, 0.05, 0.95);
        let mut eig: Vec<f64> = (1..n).map(|_| uniform(&mut r, -2.0, alpha)).collect();
        eig.push(alpha);
        let w = symmetric_with_spectrum(&mut r, &eig);
        let out = max_rate(&w, ModelKind::FiringRate, TimeDomain::Continuous, ActivationClass::Mone, 1e-3, &opts)
            .map_err(err)?;
        let c = out.rate().ok_or_else(|| format!("instance {k}: no feasible rate ({out:?})"))?;
        let gap = (c - (1.0 - alpha)).abs();
        worst_gap = worst_gap.max(gap);
        ensure(gap <= 2e-3, || format!("instance {k}: rate {c} vs 1 − α = {}", 1.0 - alpha))?;
        let cf = symmetric_closed_form(&SymMatrix::new(w.clone()).map_err(err)?).map_err(err)?;
        ensure((cf.spec.rate - (1.0 - alpha)).abs() <= 1e-10, || format!("instance {k}: closed-form rate {}", cf.spec.rate))?;
        let m = verify_certificate(&w, &cf).map_err(err)?;
        worst_margin = worst_margin.min(m);
        ensure(m >= -1e-7, || format!("instance {k}: closed-form margin {m:.3e}"))?;
    }
    Ok(format!("max |c − (1 − α)| = {worst_gap:.2e}, min closed-form margin {worst_margin:.1e}"))
}

fn random_weight(r: &mut ChaCha8Rng) -> Matrix {
    let n = 2 + (uniform(r, 0.0, 3.0) as usize);
    let s = uniform(r, 0.3, 1.6) / (n as f64).sqrt();
    gaussian(r, n, n, s)
}

fn c3_structure() -> Check {
    let mut r = rng(3);
    let opts = SolveOptions::default();
    let mut counts = Vec::new();
    for (model, domain) in CELLS {
        let rate = if domain == TimeDomain::Continuous { 0.1 } else { 0.9 };
        let (mut n_cone, mut n_mone) = (0, 0);
        for k in 0..200 {
            let w = random_weight(&mut r);
            let tag = || format!("{model:?}/{domain:?} instance {k}");
            for nonlin in [ActivationClass::Cone, ActivationClass::Mone] {
                let sp = spec(model, domain, nonlin, rate);
                let cert = match certify(&w, &sp, &opts) {
                    Ok(c) => c,
                    Err(CertError::Infeasible { .. }) => continue,
                    Err(e) => return Err(format!("{}: {e}", tag())),
                };
                if nonlin == ActivationClass::Cone {
                    n_cone += 1;
                    let sm = CertificateSpec { nonlin: ActivationClass::Mone, ..sp };
                    let m = certificate_margin(&w, &sm, cert.p.matrix(), &cert.q.to_matrix()).map_err(err)?;
                    ensure(m >= -1e-9, || format!("{}: CONE certificate fails under MONE ({m:.3e})", tag()))?;
                } else {
                    n_mone += 1;
                }
                if domain == TimeDomain::Discrete {
                    disc_to_cts_transfer(&w, &cert).map_err(|e| format!("{}: transfer {e}", tag()))?;
                }
                let (wt, dual) = dual_transform(&w, &cert).map_err(err)?;
                ensure(dual.margin >= -1e-7, || format!("{}: dual margin {:.3e}", tag(), dual.margin))?;
                let (w2, back) = dual_transform(&wt, &dual).map_err(err)?;
                ensure(w2.approx_eq(&w, 0.0), || format!("{}: double transpose differs", tag()))?;
                let m2 = certificate_margin(&w, &cert.spec, back.p.matrix(), &back.q.to_matrix()).map_err(err)?;
                ensure((m2 - cert.margin).abs() <= 1e-7, || {
                    format!("{}: round-trip margin drift {:.3e}", tag(), m2 - cert.margin)
                })?;
            }
        }
        ensure(n_cone >= 20 && n_mone >= 20, || format!("{model:?}/{domain:?}: too few feasible samples ({n_cone}, {n_mone})"))?;
        counts.push(format!("{n_cone}/{n_mone}"));
    }
    Ok(format!("feasible CONE/MONE per cell: {}", counts.join(", ")))
}

fn c4_schur() -> Check {
    let mut r = rng(4);
    let opts = SolveOptions::default();
    let rho = 1.0 - 1e-6;
    let dss = |w: &Matrix| -> Result<bool, String> {
        match schur_diag_stable(w, &opts) {
            Ok(_) => Ok(true),
            Err(CertError::Infeasible { .. }) => Ok(false),
            Err(e) => Err(e.to_string()),
        }
    };
    let feasible = |w: &Matrix, model| -> Result<bool, String> {
        match certify(w, &spec(model, TimeDomain::Discrete, ActivationClass::Cone, rho), &opts) {
            Ok(_) => Ok(true),
            Err(CertError::Infeasible { .. }) => Ok(false),
            Err(e) => Err(e.to_string()),
        }
    };
    let (mut tested, mut rejected, mut positive) = (0, 0, 0);
    while tested < 100 {
        let n = 2 + (uniform(&mut r, 0.0, 3.0) as usize);
        let s = uniform(&mut r, 0.3, 1.3) / (n as f64).sqrt();
            let w = gaussian(&mut r, n, n, s);
        // Keep instances whose classification is stable under ±3% scaling.
        let lo = dss(&w.scale(0.97))?;
        let hi = dss(&w.scale(1.03))?;
        if lo != hi {
            rejected += 1;
            continue;
        }
        tested += 1;
        let s = dss(&w)?;
        let fr = feasible(&w, ModelKind::FiringRate)?;
        let hop = feasible(&w, ModelKind::Hopfield)?;
        ensure(s == fr && s == hop, || format!("instance {tested}: DSS {s}, FR {fr}, Hopfield {hop}\nW = {w:?}"))?;
        positive += s as usize;
    }
    ensure((10..=90).contains(&positive), || format!("unbalanced sample: {positive} stable of 100"))?;
    Ok(format!("0 disagreements on 100 instances ({positive} stable, {rejected} near-boundary resampled)"))
}

fn random_contraction(r: &mut ChaCha8Rng, n: usize) -> Matrix {
    let s = gaussian(r, n, n, 1.0);
    let t = uniform(r, 0.0, 1.0);
    s.scale(t / sigma_max(&s).unwrap())
}

fn c5_param() -> Check {
    let mut r = rng(5);
    let mut worst = f64::INFINITY;
    for k in 0..300 {
        let c = [0.0, 0.1, 0.5, 0.9, 1.0][k % 5];
        let n = 2 + k % 4;
        let d: Vec<f64> = (0..n).map(|_| uniform(&mut r, -1.0, 1.0)).collect();
        let v = &gaussian(&mut r, n, n, 0.5) + &Matrix::identity(n);
        if sigma_min(&v).map_err(err)? < 1e-3 {
            continue;
        }
        let pw = ParamWeights { d, s: random_contraction(&mut r, n), v, c };
        let par = parameterize_weight(&pw).map_err(err)?;
        let m = parameterized_margin(&par, c).map_err(err)?;
        worst = worst.min(m);
        ensure(m >= -1e-8, || format!("triple {k} (c = {c}): margin {m:.3e}"))?;
    }
    let opts = SolveOptions::default();
    let mut worst_defect = f64::NEG_INFINITY;
    let mut done = 0;
    while done < 50 {
        let w = random_weight(&mut r);
        let c = uniform(&mut r, 0.05, 0.6);
        let cert = match certify(&w, &CertificateSpec::fr_cts_mone(c), &opts) {
            Ok(cert) => cert,
            Err(CertError::Infeasible { .. }) => continue,
            Err(e) => return Err(e.to_string()),
        };
        let s = reconstruct_s(&w, cert.p.matrix(), &cert.q.to_matrix(), c).map_err(err)?;
        let defect = contraction_defect(&s).map_err(err)?;
        worst_defect = worst_defect.max(defect);
        ensure(defect <= 1e-8, || format!("certificate {done}: λ_max(SᵀS) − 1 = {defect:.3e}"))?;
        done += 1;
    }
    Ok(format!("min forward margin {worst:.1e}; max λ_max(SᵀS) − 1 over 50 certificates {worst_defect:.2e}"))
}

fn c6_decay() -> Check {
    let mut r = rng(6);
    let opts = SolveOptions::default();
    let plan = [
        (ModelKind::FiringRate, TimeDomain::Continuous, ActivationClass::Mone, Activation::Tanh),
        (ModelKind::Hopfield, TimeDomain::Continuous, ActivationClass::Mone, Activation::Relu),
        (ModelKind::FiringRate, TimeDomain::Continuous, ActivationClass::Cone, Activation::Saturation),
        (ModelKind::FiringRate, TimeDomain::Discrete, ActivationClass::Cone, Activation::Tanh),
        (ModelKind::Hopfield, TimeDomain::Discrete, ActivationClass::Mone, Activation::SigmoidCentered),
    ];
    let mut worst_slope_gap = f64::NEG_INFINITY;
    let mut worst_ratio_gap = f64::NEG_INFINITY;
    for k in 0..20 {
        let (model, domain, nonlin, act) = plan[k % plan.len()];
        let n = 2 + k % 4;
        let rate = if domain == TimeDomain::Continuous { uniform(&mut r, 0.1, 0.5) } else { uniform(&mut r, 0.6, 0.95) };
        let sp = spec(model, domain, nonlin, rate);
        let (w, cert) = loop {
            let s = uniform(&mut r, 0.2, 1.0) / (n as f64).sqrt();
            let w = gaussian(&mut r, n, n, s);
            match certify(&w, &sp, &opts) {
                Ok(c) => break (w, c),
                Err(CertError::Infeasible { .. }) => continue,
                Err(e) => return Err(e.to_string()),
            }
        };
        let sys = SynapticModel::new(model, domain, w, Matrix::identity(n), Matrix::identity(n), Matrix::zeros(n, n), act)
            .map_err(err)?;
        let p = cert.p.matrix();
        let u = gaussian_vec(&mut r, n, 0.5);
        match domain {
            TimeDomain::Continuous => {
                let cfg = SimConfig::new(5.0 / rate, sys.default_dt()).every(20);
                let a = simulate(&sys, &|_| u.clone(), &gaussian_vec(&mut r, n, 2.0), &cfg).map_err(err)?;
                let b = simulate(&sys, &|_| u.clone(), &gaussian_vec(&mut r, n, 2.0), &cfg).map_err(err)?;
                let d0 = weighted_norm(&sub_vec(&a.x[0], &b.x[0]), p).ln();
                for i in 1..a.len() {
                    let t = a.times[i];
                    let slope = (weighted_norm(&sub_vec(&a.x[i], &b.x[i]), p).ln() - d0) / t;
                    worst_slope_gap = worst_slope_gap.max(slope + rate);
                    ensure(slope <= -rate + 1e-2, || format!("model {k}: slope {slope:.4} at t = {t} with c = {rate:.4}"))?;
                }
            }
            TimeDomain::Discrete => {
                for _ in 0..200 {
                    let x1 = gaussian_vec(&mut r, n, 2.0);
                    let x2 = gaussian_vec(&mut r, n, 2.0);
                    let d0 = weighted_norm(&sub_vec(&x1, &x2), p);
                    let d1 = weighted_norm(&sub_vec(&sys.map(&x1, &u), &sys.map(&x2, &u)), p);
                    worst_ratio_gap = worst_ratio_gap.max(d1 / d0 - rate);
                    ensure(d1 <= (rate + 1e-9) * d0, || format!("model {k}: ratio {} > ρ = {rate}", d1 / d0))?;
                }
            }
        }
    }
    Ok(format!(
        "max (slope + c) = {worst_slope_gap:.2e}, max (ratio − ρ) = {worst_ratio_gap:.2e}"
    ))
}

struct Loop {
    plant: SynapticModel,
    fb: FeedbackDesign,
    obs: ObserverDesign,
    c_k: f64,
    c_o: f64,
}

/// Synthetic `n = 8` tanh plant with two inputs and two outputs.
///
/// The tracking plant is weakly coupled with `B` from orthonormal columns and
/// `C ≈ Bᵀ`, which keeps the low-gain constants well conditioned.
fn synthetic_loop(seed: u64, tracking: bool) -> Result<Loop, String> {
    let mut r = rng(seed);
    let n = 8;
    let opts = SolveOptions::default();
    let (w, b, c, c_k, c_o) = if tracking {
        let w = loop {
            let w = gaussian(&mut r, n, n, 0.3 / (n as f64).sqrt());
            if certify(&w, &CertificateSpec::fr_cts_mone(0.5), &opts).is_ok() {
                break w;
            }
        };
        let u = orthogonal(&mut r, n);
        let b = u.submatrix(0, 0, n, 2);
        let c = &b.transpose() + &gaussian(&mut r, 2, n, 0.05);
        (w, b, c, 0.5, 0.5)
    } else {
        let w = gaussian(&mut r, n, n, 1.2 / (n as f64).sqrt());
        let b = gaussian(&mut r, n, 2, 1.0 / (n as f64).sqrt());
        let c = gaussian(&mut r, 2, n, 1.0 / (n as f64).sqrt());
        (w, b, c, 0.2, 0.3)
    };
    let plant = SynapticModel::new(ModelKind::FiringRate, TimeDomain::Continuous, w.clone(), b.clone(), c.clone(), Matrix::zeros(2, 2), Activation::Tanh)
        .map_err(err)?;
    let fb = synth_state_feedback(&w, &b, c_k, &opts).map_err(|e| format!("feedback: {e}"))?;
    let obs = synth_observer(&w, &c, c_o, &opts).map_err(|e| format!("observer: {e}"))?;
    Ok(Loop { plant, fb, obs, c_k, c_o })
}

fn step_for(plant: &SynapticModel, g: &GainSet) -> f64 {
    let w_cl = &plant.w + &plant.b.matmul(&g.k_f);
    let w_o = &plant.w - &g.l.matmul(&plant.c);
    let s = sigma_max(&w_cl).unwrap().max(sigma_max(&w_o).unwrap()).max(1.0);
    0.02 / s
}

fn c7_separation() -> Check {
    let lp = synthetic_loop(7, false)?;
    let (n, m, p) = (8, 2, 2);
    let g = GainSet {
        k_f: lp.fb.k.clone(),
        l: lp.obs.l.clone(),
        k_i: Matrix::zeros(m, p),
        epsilon: 0.0,
        c_k: lp.c_k,
        c_o: lp.c_o,
        c_r: 1.0,
        p_x: lp.fb.p().map_err(err)?,
        p_o: lp.obs.p.matrix().clone(),
        p_r: Matrix::identity(m),
    };
    let k = separation_constants(&lp.plant, &g).map_err(err)?;
    let dt = step_for(&lp.plant, &g);
    let horizon = 6.0 / lp.c_k.min(lp.c_o);
    let cfg = SimConfig::new(horizon, dt).every(((horizon / dt) as usize / 1500).max(1));
    let mut r = rng(70);
    let (mut samples, mut worst_o, mut worst_s) = (0, 0.0f64, 0.0f64);
    for run in 0..100 {
        let x0 = gaussian_vec(&mut r, n, 1.0);
        let xi0 = gaussian_vec(&mut r, n, 1.0);
        let u0 = gaussian_vec(&mut r, m, 0.5);
        let reference = PiecewiseConstant::constant(vec![0.0; p]);
        let traj = simulate_closed_loop(&lp.plant, &g, &reference, &x0, &xi0, &u0, &cfg).map_err(err)?;
        ensure(!traj.diverged, || format!("run {run} diverged"))?;
        let rep = check_separation_bounds(&traj, &lp.plant, &g, &Scenario::Nominal, &k, 5e-2).map_err(err)?;
        samples += rep.samples;
        worst_o = worst_o.max(rep.max_ratio_observer);
        worst_s = worst_s.max(rep.max_ratio_state);
        ensure(rep.passed(), || format!("run {run}: {} violations, first {:?}", rep.violations, rep.first_violation))?;
    }
    Ok(format!(
        "{samples} samples, 0 violations; max value/bound observer {worst_o:.3}, state {worst_s:.3} (c_K = {}, c_O = {})",
        lp.c_k, lp.c_o
    ))
}

fn c8_tracking() -> Check {
    let lp = synthetic_loop(8, true)?;
    let opts = SolveOptions::default();
    let plant = &lp.plant;
    let w_cl = &plant.w + &plant.b.matmul(&lp.fb.k);
    // The multiplier of the feedback certificate pins the scale of the
    // homogeneous reduced-dynamics LMI. Take the smallest slope floor δ on a
    // grid that admits some rate, then 90% of the largest rate found.
    let q_fixed = IntegralQ::Fixed(lp.fb.d.inverse());
    let solve = |delta: f64, c_r: f64| synth_integral_gain(&w_cl, &plant.b, &plant.c, delta, c_r, &q_fixed, &opts).ok();
    let mut design = None;
    for delta in [0.3, 0.5, 0.7, 0.8, 0.9, 0.95] {
        if solve(delta, 1e-6).is_none() {
            continue;
        }
        let (mut lo, mut hi) = (1e-6f64, 1e-6f64);
        while hi < 1e3 && solve(delta, hi).is_some() {
            lo = hi;
            hi *= 4.0;
        }
        for _ in 0..30 {
            let mid = (lo * hi).sqrt();
            if solve(delta, mid).is_some() { lo = mid } else { hi = mid }
        }
        let c_r = 0.9 * lo;
        design = solve(delta, c_r).map(|d| (d, c_r, delta));
        break;
    }
    let (int, c_r, delta) = design.ok_or("no feasible integral rate")?;
    let probe = gain_set(&lp.fb, lp.c_k, &lp.obs, lp.c_o, &int, c_r, 1.0).map_err(err)?;
    let k = probe.norm_constants(&plant.b, &plant.c).map_err(err)?;
    let bound = epsilon_bound(&k, lp.c_k, c_r);
    let eps = 0.5 * bound;
    let (mm, hurwitz) = tracking_gain_matrix(&k, lp.c_k, lp.c_o, c_r, eps).map_err(err)?;
    ensure(hurwitz, || format!("M(ε) not Hurwitz at ε = {eps:.3e}: {mm:?}"))?;
    let g = GainSet { epsilon: eps, ..probe };
    let alpha = spectral_abscissa(&mm).map_err(err)?;

    let zero = vec![0.0; plant.n()];
    let eq_opts = FixedPointOptions::default();
    // Scale the two input levels so equilibrium activation arguments stay
    // where the tanh slope is at least δ.
    let z_max = 0.7 * (1.0 - delta).sqrt().atanh();
    let mut levels = Vec::new();
    for dir in [[1.0, -0.6], [-0.8, 1.0]] {
        let x = closed_loop_equilibrium(plant, &g.k_f, &dir, &zero, &zero, &eq_opts).map_err(err)?;
        let z = add_vec(&w_cl.mul_vec(&x), &plant.b.mul_vec(&dir));
        let s = z_max / z.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let u: Vec<f64> = dir.iter().map(|v| v * s).collect();
        let x = closed_loop_equilibrium(plant, &g.k_f, &u, &zero, &x, &eq_opts).map_err(err)?;
        levels.push(plant.c.mul_vec(&x));
    }
    let seg = (1e5f64).ln() / -alpha;
    let reference = PiecewiseConstant::new(vec![0.0, seg], levels.clone()).map_err(err)?;
    let dt = step_for(plant, &g);
    let cfg = SimConfig::new(2.0 * seg, dt).every(((2.0 * seg / dt) as usize / 4000).max(1));
    let traj = simulate_closed_loop(plant, &g, &reference, &zero, &zero, &[0.0, 0.0], &cfg).map_err(err)?;
    ensure(!traj.diverged, || "closed loop diverged".into())?;
    let mut errs = Vec::new();
    for (j, lvl) in levels.iter().enumerate() {
        let t_end = seg * (j + 1) as f64;
        let i = traj.times.iter().rposition(|&t| t < t_end - 1e-9).unwrap();
        let e = norm2(&sub_vec(&traj.y[i], lvl));
        errs.push(e);
        ensure(e <= 1e-3, || format!("level {j}: ‖y − r‖ = {e:.3e} at t = {}", traj.times[i]))?;
    }
    // Smallest activation slope met along the run, against the assumed δ.
    let mut min_slope = f64::INFINITY;
    for i in 0..traj.len() {
        let u = add_vec(&g.k_f.mul_vec(&traj.xi[i]), &traj.uext[i]);
        let z = add_vec(&plant.w.mul_vec(&traj.x[i]), &plant.b.mul_vec(&u));
        min_slope = z.iter().map(|&v| plant.activation.slope(v)).fold(min_slope, f64::min);
    }
    Ok(format!(
        "‖y − r‖ before switches {:.1e}, {:.1e}; ε = {eps:.3e} (bound {bound:.3e}), c_r = {c_r}, α(M) = {alpha:.3e}, min slope {min_slope:.2} vs δ = {delta}",
        errs[0], errs[1]
    ))
}

fn c9_graph() -> Check {
    let mut r = rng(9);
    let opts = SolveOptions::default();
    let (mut worst_eig, mut worst_sim): (f64, f64) = (0.0, 0.0);
    for k in 0..20 {
        let nodes = 2 + k % 5;
        let m = 1 + k % 3;
        let adj = normalize_adjacency(&random_graph(&mut r, nodes, 0.4)).map_err(err)?;
        let c = uniform(&mut r, 0.1, 0.5);
        let (g, cert) = loop {
            let s = uniform(&mut r, 0.2, 1.2) / (m as f64).sqrt();
            let w = gaussian(&mut r, m, m, s);
            let g = GraphModel::new(w, Matrix::identity(m), adj.matrix().clone(), Activation::Tanh).map_err(err)?;
            match graph_certify(&g, c, &GraphVariant::Undirected, &opts) {
                Ok(cert) => break (g, cert),
                Err(NetworkError::Cert(CertError::Infeasible { .. })) => continue,
                Err(e) => return Err(format!("graph {k}: {e}")),
            }
        };
        let (p, q) = (cert.p.matrix().clone(), cert.q.to_matrix());
        let ((fmin, fmax), (umin, umax)) = kron_decomposition_gap(&g, &p, &q, c).map_err(err)?;
        let gap = (fmin - umin).abs().max((fmax - umax).abs());
        worst_eig = worst_eig.max(gap);
        ensure(gap <= 1e-8, || format!("graph {k}: eigenvalue mismatch {gap:.3e}"))?;
        ensure(fmax <= 1e-9, || format!("graph {k}: Kronecker block not ⪯ 0 (λ_max = {fmax:.3e})"))?;

        let x0 = gaussian(&mut r, m, nodes, 1.0);
        let u = gaussian(&mut r, m, nodes, 0.5);
        let cfg = SimConfig::new(5.0, 1e-2);
        let a = simulate_graph(&g, &u, &x0, &cfg).map_err(err)?;
        let vm = vectorized_model(&g).map_err(err)?;
        let uv = g.b.matmul(&u).vec_cols();
        let b = simulate(&vm, &|_| uv.clone(), &x0.vec_cols(), &cfg).map_err(err)?;
        ensure(a.len() == b.len(), || format!("graph {k}: trajectory lengths differ"))?;
        for (xa, xb) in a.x.iter().zip(&b.x) {
            worst_sim = worst_sim.max(max_abs_diff(xa, xb));
        }
        ensure(worst_sim <= 1e-9, || format!("graph {k}: simulations differ by {worst_sim:.3e}"))?;
    }
    Ok(format!("max eigenvalue gap {worst_eig:.1e}, max simulation gap {worst_sim:.1e}"))
}

fn subsystem(r: &mut ChaCha8Rng, n: usize, w: Option<Matrix>, feedthrough: bool) -> SynapticModel {
    let w = w.unwrap_or_else(|| gaussian(r, n, n, 0.5 / (n as f64).sqrt()));
    let d = if feedthrough { gaussian(r, 1, 1, 0.2) } else { Matrix::zeros(1, 1) };
    SynapticModel::new(
        ModelKind::FiringRate,
        TimeDomain::Continuous,
        w,
        gaussian(r, n, 1, 1.0),
        gaussian(r, 1, n, 1.0),
        d,
        Activation::Tanh,
    )
    .unwrap()
}

fn c10_interconnect() -> Check {
    let mut r = rng(10);
    let opts = SolveOptions::default();
    let c = 0.1;
    let mut certified = 0;
    let mut blocks = 0;
    while certified < 20 {
        let k = 2 + certified % 2;
        let subs: Vec<_> = (0..k).map(|i| subsystem(&mut r, 1 + (i + certified) % 3, None, i % 2 == 1)).collect();
        let coupling = gaussian(&mut r, k, k, 0.4);
        let ic = Interconnection::new(subs, coupling).map_err(err)?;
        let cert = match certify_network(&ic, c, &opts) {
            Ok(cert) => cert,
            Err(NetworkError::Cert(CertError::Infeasible { .. })) => continue,
            Err(e) => return Err(e.to_string()),
        };
        let sub = block_necessary_check(&cert, &ic).map_err(|e| format!("network {certified}: {e}"))?;
        blocks += sub.len();
        certified += 1;
    }
    let skew = Matrix::from_rows(&[[0.0, 4.0], [-4.0, 0.0]]);
    for trial in 0..20 {
        let k = 2 + trial % 2;
        let mut subs = vec![subsystem(&mut r, 2, Some(skew.clone()), false)];
        subs.extend((1..k).map(|_| subsystem(&mut r, 2, None, false)));
        let mut coupling = gaussian(&mut r, k, k, 1.0);
        coupling[(0, 0)] = 0.0;
        let ic = Interconnection::new(subs, coupling).map_err(err)?;
        for rate in [0.01, 0.1] {
            match certify_network(&ic, rate, &opts) {
                Err(NetworkError::Cert(CertError::Infeasible { .. })) => {}
                other => return Err(format!("skew network {trial} at c = {rate}: expected infeasible, got {:?}", other.map(|c| c.margin))),
            }
        }
        let bad = obstructing_blocks(&ic, 0.01, &opts).map_err(err)?;
        ensure(bad.contains(&0), || format!("skew network {trial}: obstructing blocks {bad:?}"))?;
    }
    Ok(format!("20 certified networks, {blocks} principal blocks verified; 20 skew networks never certified"))
}

fn layer(r: &mut ChaCha8Rng, out: usize, inp: usize, scale: f64) -> Affine {
    Affine { a: gaussian(r, out, inp, scale / (inp as f64).sqrt()), b: gaussian_vec(r, out, 0.1) }
}

fn stack(r: &mut ChaCha8Rng, inp: usize, hidden: usize, out: usize, scale: f64) -> LayerStack {
    LayerStack::new(vec![layer(r, hidden, inp, 1.0), layer(r, out, hidden, scale)], Activation::Tanh).unwrap()
}

pub fn demo_deq(seed: u64) -> DeqSpec {
    let mut r = rng(seed);
    let (n, k, h) = (4, 3, 6);
    DeqSpec {
        n,
        c: 0.5,
        eps: 0.5,
        activation: Activation::Tanh,
        input_radius: 1.0,
        d_map: stack(&mut r, k, h, n, 0.3),
        x_map: stack(&mut r, k, h, n * n, 0.5),
        y_map: stack(&mut r, k, h, n * n, 0.5),
        b_map: stack(&mut r, k, h, n, 1.0),
    }
}

fn ball_point(r: &mut ChaCha8Rng, k: usize, radius: f64) -> Vec<f64> {
    let v = gaussian_vec(r, k, 1.0);
    let s = radius * uniform(r, 0.0, 1.0).powf(1.0 / k as f64) / norm2(&v);
    v.iter().map(|x| x * s).collect()
}

fn c11_deq() -> Check {
    let spec = demo_deq(11);
    let mut r = rng(110);
    let l = spec.lipschitz().map_err(err)?;
    let mut worst: f64 = 0.0;
    let mut worst_w: f64 = 0.0;
    for pair in 0..200 {
        let u = ball_point(&mut r, 3, 1.0);
        let u2 = ball_point(&mut r, 3, 1.0);
        let s = lipschitz_bound_check(&spec, &u, &u2, 1e-12).map_err(err)?;
        worst = worst.max(s.gap / s.bound);
        ensure(s.holds(), || format!("pair {pair}: gap {:.3e} > bound {:.3e}", s.gap, s.bound))?;
        let (a, _, _) = deq_instance(&spec, &u).map_err(err)?;
        let (b, _, _) = deq_instance(&spec, &u2).map_err(err)?;
        let q = sigma_max(&(&a.w - &b.w)).map_err(err)? / norm2(&sub_vec(&u, &u2));
        worst_w = worst_w.max(q / l.ell_w);
        ensure(q <= l.ell_w, || format!("pair {pair}: ‖ΔW‖/‖Δu‖ = {q:.3e} exceeds ℓ_W = {:.3e}", l.ell_w))?;
    }
    Ok(format!(
        "0 violations; max gap/bound {worst:.2e}, max observed/declared ℓ_W {worst_w:.2e} (ℓ_W = {:.2e}, ℓ_B = {:.2e})",
        l.ell_w, l.ell_b
    ))
}

fn c12_epsilon() -> Check {
    let mut r = rng(12);
    for k in 0..100 {
        let nc = NormConstants {
            ell_u: uniform(&mut r, 0.1, 5.0),
            ell_k: uniform(&mut r, 0.1, 5.0),
            ell_ir: uniform(&mut r, 0.1, 5.0),
            ell_iu: uniform(&mut r, 0.1, 5.0),
        };
        let (c_k, c_o, c_r) = (uniform(&mut r, 0.05, 2.0), uniform(&mut r, 0.05, 2.0), uniform(&mut r, 0.05, 2.0));
        let b = epsilon_bound(&nc, c_k, c_r);
        ensure(b.is_finite() && b > 0.0, || format!("tuple {k}: bound {b}"))?;
        let (_, ok) = tracking_gain_matrix(&nc, c_k, c_o, c_r, 0.99 * b).map_err(err)?;
        ensure(ok, || format!("tuple {k}: M(0.99·bound) not Hurwitz"))?;
        let (m, _) = tracking_gain_matrix(&nc, c_k, c_o, c_r, 1.01 * b).map_err(err)?;
        let (tr, det) = trailing_trace_det(&m);
        ensure(!(tr < 0.0 && det > 0.0), || format!("tuple {k}: trace/det condition holds at 1.01·bound"))?;
    }
    Ok("100 tuples: Hurwitz at 0.99·bound, trace/det condition fails at 1.01·bound".into())
}
