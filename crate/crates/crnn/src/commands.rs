use std::path::Path;
use std::time::Instant;

use crnn_core::certificates::{certify, max_rate, ActivationClass, CertificateSpec, ModelKind, TimeDomain};
use crnn_core::deq::{parameterize_free, FreeWeights};
use crnn_core::linalg::{sigma_max, spectral_abscissa, Matrix};
use crnn_core::lmi::{BisectOutcome, SolveOptions};
use crnn_core::networks::{block_necessary_check, certify_network, graph_certify, interconnect, simulate_graph, GraphModel, GraphVariant};
use crnn_core::sim::{
    check_separation_bounds, separation_constants, simulate, simulate_closed_loop, simulate_closed_loop_with, Activation,
    PiecewiseConstant, Scenario, SimConfig, SynapticModel,
};
use crnn_core::synthesis::{
    epsilon_bound, gain_set, synth_integral_gain, synth_observer, synth_state_feedback, tracking_gain_matrix, IntegralQ,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::json;

use crate::cli::*;
use crate::error::CliError;
use crate::format::{
    load_gains, load_model, matrix, read, rows, vector, AdjacencyFile, GainsFile, InitFile, ModelFile, NetworkFile,
    SignalFile,
};
use crate::report::{CertRecord, Inequality, Report, Weight};

/// Name of the generator behind `parameterize` and `check-bounds`.
pub const GENERATOR: &str = "ChaCha8Rng";

/// Longest run accepted, in integration steps.
const MAX_STEPS: f64 = 1e8;

pub struct Ctx {
    pub argv: Vec<String>,
    pub started: Instant,
}

impl Ctx {
    fn report(&self) -> Report {
        Report::new(&self.argv)
    }

    fn finish(&self, mut r: Report, code: i32) -> Outcome {
        r.wall_time_s = self.started.elapsed().as_secs_f64();
        Outcome { body: r.to_json(), code }
    }
}

/// Text for the output sink and the exit code.
pub struct Outcome {
    pub body: String,
    pub code: i32,
}

pub fn dispatch(cmd: &Command, ctx: &Ctx) -> Result<Outcome, CliError> {
    match cmd {
        Command::Certify(a) => certify_cmd(a, ctx),
        Command::MaxRate(a) => max_rate_cmd(a, ctx),
        Command::Synth(SynthCommand::Feedback(a)) => feedback_cmd(a, ctx),
        Command::Synth(SynthCommand::Observer(a)) => observer_cmd(a, ctx),
        Command::Synth(SynthCommand::Integral(a)) => integral_cmd(a, ctx),
        Command::EpsilonBound(a) => epsilon_cmd(a, ctx),
        Command::Interconnect(a) => interconnect_cmd(a, ctx),
        Command::Graph(GraphCommand::Certify(a)) => graph_certify_cmd(a, ctx),
        Command::Graph(GraphCommand::Simulate(a)) => graph_simulate_cmd(a),
        Command::Parameterize(a) => parameterize_cmd(a, ctx),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Verify(a) => verify_cmd(a, ctx),
        Command::CheckBounds(a) => check_bounds_cmd(a, ctx),
    }
}

fn opts() -> SolveOptions {
    SolveOptions::default()
}

fn finite(flag: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::input(format!("{flag}: must be finite, got {v}")))
    }
}

fn positive(flag: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::input(format!("{flag}: must be positive and finite, got {v}")))
    }
}

fn nonlin_class(n: Nonlin) -> ActivationClass {
    match n {
        Nonlin::Cone => ActivationClass::Cone,
        Nonlin::Mone => ActivationClass::Mone,
    }
}

fn spec_of(model: &SynapticModel, s: &SpecArgs) -> (ModelKind, TimeDomain, ActivationClass) {
    let kind = match s.arch {
        Some(Arch::Fr) => ModelKind::FiringRate,
        Some(Arch::Hopfield) => ModelKind::Hopfield,
        None => model.kind,
    };
    let domain = match s.time {
        Some(Time::Cts) => TimeDomain::Continuous,
        Some(Time::Disc) => TimeDomain::Discrete,
        None => model.domain,
    };
    (kind, domain, nonlin_class(s.nonlin))
}

/// Synthesis works on continuous firing-rate plants.
fn require_fr_cts(model: &SynapticModel, path: &Path) -> Result<(), CliError> {
    if model.kind != ModelKind::FiringRate || model.domain != TimeDomain::Continuous {
        return Err(CliError::input(format!("{}: a continuous firing-rate model is required", path.display())));
    }
    Ok(())
}

fn sim_config(horizon: f64, dt: f64, every: usize) -> Result<SimConfig, CliError> {
    let horizon = finite("--horizon", horizon)?;
    let dt = positive("--dt", dt)?;
    if horizon < 0.0 || horizon / dt > MAX_STEPS {
        return Err(CliError::input(format!("--horizon {horizon} with --dt {dt} is negative or exceeds {MAX_STEPS:e} steps")));
    }
    Ok(SimConfig::new(horizon, dt).every(every))
}

fn certify_cmd(a: &CertifyArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let model = load_model(&a.model)?;
    let (kind, domain, nonlin) = spec_of(&model, &a.spec);
    let rate = match domain {
        TimeDomain::Continuous => a.rate.ok_or_else(|| CliError::input("--rate is required in continuous time"))?,
        TimeDomain::Discrete => a.factor.or(a.rate).ok_or_else(|| CliError::input("--factor is required in discrete time"))?,
    };
    let spec = CertificateSpec::new(kind, domain, nonlin, finite("--rate", rate)?);
    let cert = certify(&model.w, &spec, &opts())?;
    let mut r = ctx.report();
    r.feasible = true;
    r.iterations = Some(cert.iterations);
    r.push_certificate(CertRecord::lure("plant", Weight::Plant, &spec, cert.p.matrix(), cert.q.entries(), cert.margin));
    Ok(ctx.finish(r, 0))
}

fn max_rate_cmd(a: &MaxRateArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let model = load_model(&a.model)?;
    let (kind, domain, nonlin) = spec_of(&model, &a.spec);
    let tol = positive("--tol", a.tol)?;
    match max_rate(&model.w, kind, domain, nonlin, tol, &opts())? {
        BisectOutcome::Rate { rate, solves, .. } => {
            let spec = CertificateSpec::new(kind, domain, nonlin, rate);
            let cert = certify(&model.w, &spec, &opts())?;
            let mut r = ctx.report();
            r.feasible = true;
            r.iterations = Some(cert.iterations);
            r.push_certificate(CertRecord::lure("plant", Weight::Plant, &spec, cert.p.matrix(), cert.q.entries(), cert.margin));
            r.detail("solves", solves);
            r.detail("tol", tol);
            Ok(ctx.finish(r, 0))
        }
        BisectOutcome::LoInfeasible { best_margin } => Err(CliError::Negative(format!(
            "no rate certifies this model (best margin at the weakest rate {best_margin:.3e})"
        ))),
    }
}

fn feedback_cmd(a: &SynthArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let model = load_model(&a.model)?;
    require_fr_cts(&model, &a.model)?;
    let fb = synth_state_feedback(&model.w, &model.b, finite("--rate", a.rate)?, &opts())?;
    let p = fb.p()?;
    let spec = CertificateSpec::fr_cts_mone(a.rate);
    let mut r = ctx.report();
    r.feasible = true;
    r.iterations = Some(fb.iterations);
    r.push_certificate(CertRecord::lure("closed-loop", Weight::Feedback, &spec, &p, fb.d.inverse().entries(), fb.margin));
    r.gains = Some(GainsFile { k_f: Some(rows(&fb.k)), c_k: Some(a.rate), p_x: Some(rows(&p)), ..Default::default() });
    Ok(ctx.finish(r, 0))
}

fn observer_cmd(a: &SynthArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let model = load_model(&a.model)?;
    require_fr_cts(&model, &a.model)?;
    let obs = synth_observer(&model.w, &model.c, finite("--rate", a.rate)?, &opts())?;
    let spec = CertificateSpec::fr_cts_mone(a.rate);
    let mut r = ctx.report();
    r.feasible = true;
    r.iterations = Some(obs.iterations);
    r.push_certificate(CertRecord::lure("observer", Weight::Observer, &spec, obs.p.matrix(), obs.q.entries(), obs.margin));
    r.gains = Some(GainsFile {
        l: Some(rows(&obs.l)),
        c_o: Some(a.rate),
        p_o: Some(rows(obs.p.matrix())),
        ..Default::default()
    });
    Ok(ctx.finish(r, 0))
}

/// Slope floors tried, smallest first, when `--delta` is absent.
const DELTA_GRID: [f64; 6] = [0.3, 0.5, 0.7, 0.8, 0.9, 0.95];

fn integral_cmd(a: &IntegralArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let model = load_model(&a.model)?;
    require_fr_cts(&model, &a.model)?;
    let c_k = finite("--rate", a.rate)?;
    let c_o = finite("--observer-rate", a.observer_rate.unwrap_or(c_k))?;
    let o = opts();
    let fb = synth_state_feedback(&model.w, &model.b, c_k, &o).map_err(|e| CliError::from(e).context("feedback"))?;
    let obs = synth_observer(&model.w, &model.c, c_o, &o).map_err(|e| CliError::from(e).context("observer"))?;
    let w_cl = &model.w + &model.b.matmul(&fb.k);
    // The feedback multiplier fixes the scale of the homogeneous integral LMI.
    let q_fixed = IntegralQ::Fixed(fb.d.inverse());
    let solve = |delta: f64, c_r: f64| synth_integral_gain(&w_cl, &model.b, &model.c, delta, c_r, &q_fixed, &o);
    let deltas = match a.delta {
        Some(d) => vec![finite("--delta", d)?],
        None => DELTA_GRID.to_vec(),
    };
    if let Some(c_r) = a.integral_rate {
        positive("--integral-rate", c_r)?;
    }
    let mut chosen = None;
    for &delta in &deltas {
        let c_r = match a.integral_rate {
            Some(c_r) => c_r,
            None => {
                if solve(delta, 1e-6).is_err() {
                    continue;
                }
                let (mut lo, mut hi) = (1e-6f64, 1e-6f64);
                while hi < 1e3 && solve(delta, hi).is_ok() {
                    lo = hi;
                    hi *= 4.0;
                }
                for _ in 0..30 {
                    let mid = (lo * hi).sqrt();
                    if solve(delta, mid).is_ok() {
                        lo = mid
                    } else {
                        hi = mid
                    }
                }
                0.9 * lo
            }
        };
        match solve(delta, c_r) {
            Ok(d) => {
                chosen = Some((d, c_r, delta));
                break;
            }
            Err(e) if deltas.len() == 1 => return Err(CliError::from(e).context("integral gain")),
            Err(_) => continue,
        }
    }
    let (int, c_r, delta) =
        chosen.ok_or_else(|| CliError::Negative("integral gain: no slope floor on the grid admits a rate".into()))?;
    let probe = gain_set(&fb, c_k, &obs, c_o, &int, c_r, 1.0)?;
    let k = probe.norm_constants(&model.b, &model.c)?;
    let bound = epsilon_bound(&k, c_k, c_r);
    let eps = match a.epsilon {
        Some(e) => positive("--epsilon", e)?,
        None if bound.is_finite() => 0.5 * bound,
        None => 1.0,
    };
    let (mm, hurwitz) = tracking_gain_matrix(&k, c_k, c_o, c_r, eps)?;
    let g = crnn_core::synthesis::GainSet { epsilon: eps, ..probe };

    let mut r = ctx.report();
    r.feasible = hurwitz;
    r.iterations = Some(fb.iterations + obs.iterations + int.iterations);
    r.push_certificate(CertRecord::lure("closed-loop", Weight::Feedback, &CertificateSpec::fr_cts_mone(c_k), &g.p_x, fb.d.inverse().entries(), fb.margin));
    r.push_certificate(CertRecord::lure("observer", Weight::Observer, &CertificateSpec::fr_cts_mone(c_o), &g.p_o, obs.q.entries(), obs.margin));
    let mut rec = CertRecord::lure("integral", Weight::Feedback, &CertificateSpec::fr_cts_mone(c_r), &g.p_r, int.q.entries(), int.margin);
    rec.inequality = Inequality::Integral;
    rec.delta = Some(delta);
    rec.y = Some(rows(&int.y));
    r.push_certificate(rec);
    r.gains = Some(GainsFile::from_gain_set(&g));
    r.detail("epsilon_bound", bound);
    r.detail("norm_constants", json!({"ell_u": k.ell_u, "ell_k": k.ell_k, "ell_ir": k.ell_ir, "ell_iu": k.ell_iu}));
    r.detail("M", rows(&mm));
    r.detail("hurwitz", hurwitz);
    if !hurwitz {
        r.error = Some(format!("M(ε) is not Hurwitz at ε = {eps}"));
    }
    Ok(ctx.finish(r, if hurwitz { 0 } else { 1 }))
}

fn epsilon_cmd(a: &EpsilonArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let model = load_model(&a.model)?;
    let g = load_gains(&a.gains, &model)?;
    for (flag, v) in [("c_K", g.c_k), ("c_O", g.c_o), ("c_r", g.c_r)] {
        positive(flag, v)?;
    }
    let k = g.norm_constants(&model.b, &model.c)?;
    let bound = epsilon_bound(&k, g.c_k, g.c_r);
    let eps = match a.epsilon {
        Some(e) => finite("--epsilon", e)?,
        None => g.epsilon,
    };
    let (mm, hurwitz) = tracking_gain_matrix(&k, g.c_k, g.c_o, g.c_r, eps)?;
    let mut r = ctx.report();
    r.feasible = hurwitz;
    r.detail("epsilon", eps);
    r.detail("epsilon_bound", bound);
    r.detail("norm_constants", json!({"ell_u": k.ell_u, "ell_k": k.ell_k, "ell_ir": k.ell_ir, "ell_iu": k.ell_iu}));
    r.detail("M", rows(&mm));
    r.detail("spectral_abscissa", spectral_abscissa(&mm)?);
    r.detail("hurwitz", hurwitz);
    Ok(ctx.finish(r, if hurwitz { 0 } else { 1 }))
}

fn interconnect_cmd(a: &InterconnectArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let net: NetworkFile = read(&a.model)?;
    let ic = net.to_interconnection().map_err(|e| e.context(&a.model.display().to_string()))?;
    let composed = interconnect(&ic)?;
    let cert = certify_network(&ic, finite("--rate", a.rate)?, &opts())?;
    let blocks = block_necessary_check(&cert, &ic)?;
    let mut r = ctx.report();
    r.feasible = true;
    r.iterations = Some(cert.iterations);
    r.push_certificate(CertRecord::lure("network", Weight::Plant, &cert.spec, cert.p.matrix(), cert.q.entries(), cert.margin));
    r.model = Some(ModelFile::from_model(&composed));
    r.detail("block_margins", blocks.iter().map(|b| b.margin).collect::<Vec<_>>());
    Ok(ctx.finish(r, 0))
}

fn graph_model(model: &Path, adjacency: &Path) -> Result<(GraphModel, GraphVariant), CliError> {
    let node = load_model(model)?;
    let adj: AdjacencyFile = read(adjacency)?;
    let (a, variant) = adj.to_graph().map_err(|e| e.context(&adjacency.display().to_string()))?;
    Ok((GraphModel::new(node.w, node.b, a, node.activation)?, variant))
}

fn graph_certify_cmd(a: &GraphCertifyArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let (g, variant) = graph_model(&a.model, &a.adjacency)?;
    let c = finite("--rate", a.rate)?;
    let cert = graph_certify(&g, c, &variant, &opts())?;
    let spec = CertificateSpec::fr_cts_mone(c);
    let mut r = ctx.report();
    r.feasible = true;
    r.push_certificate(CertRecord::lure("node", Weight::Plant, &spec, cert.p.matrix(), cert.q.entries(), cert.margin));
    let mut side = CertRecord::lure("side", Weight::Plant, &spec, cert.p.matrix(), cert.q.entries(), cert.side_margin);
    side.inequality = Inequality::GraphSide;
    r.push_certificate(side);
    r.detail("nodes", g.nodes());
    r.detail(
        "variant",
        match variant {
            GraphVariant::Undirected => "undirected",
            GraphVariant::Symmetrizable { .. } => "symmetrizable",
        },
    );
    r.detail("metric", rows(&cert.metric));
    Ok(ctx.finish(r, 0))
}

fn graph_simulate_cmd(a: &GraphSimulateArgs) -> Result<Outcome, CliError> {
    let (g, _) = graph_model(&a.model, &a.adjacency)?;
    let init: InitFile = match &a.init {
        Some(p) => read(p)?,
        None => InitFile::default(),
    };
    let (m, n, k) = (g.m(), g.nodes(), g.b.cols());
    let x0 = match &init.x0_graph {
        Some(r) => matrix("X0", r, (m, n))?,
        None => Matrix::zeros(m, n),
    };
    let u = match &init.u_graph {
        Some(r) => matrix("U", r, (k, n))?,
        None => Matrix::zeros(k, n),
    };
    let dt = a.time.dt.unwrap_or_else(|| 1e-3 / sigma_max(&g.kron_weight()).unwrap_or(1.0).max(1.0));
    let cfg = sim_config(a.time.horizon, dt, a.time.every)?;
    let traj = simulate_graph(&g, &u, &x0, &cfg)?;
    if traj.diverged {
        eprintln!("warning: trajectory diverged");
    }
    Ok(Outcome { body: traj.to_csv(), code: 0 })
}

/// Maps `f` over `items` on up to `jobs` threads, keeping order.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let jobs = match jobs {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        j => j,
    }
    .min(items.len().max(1));
    if jobs <= 1 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(jobs);
    std::thread::scope(|s| {
        let handles: Vec<_> = items.chunks(chunk).map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<_>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

fn gaussian(r: &mut ChaCha8Rng, rows: usize, cols: usize, sd: f64) -> Matrix {
    let d = Normal::new(0.0, sd).expect("finite standard deviation");
    Matrix::from_fn(rows, cols, |_, _| d.sample(r))
}

fn parameterized_instance(seed: u64, a: &ParameterizeArgs, argv: &[String]) -> Result<Report, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = a.dim;
    let d = gaussian(&mut rng, n, 1, 0.5).into_vec();
    let x = gaussian(&mut rng, n, n, 1.0);
    let y = gaussian(&mut rng, n, n, 1.0);
    let par = parameterize_free(&FreeWeights { d, x, y, c: a.rate, eps: a.eps })?;
    let spec = CertificateSpec::fr_cts_mone(a.rate);
    let margin = crnn_core::certificates::certificate_margin(&par.w, &spec, &par.p, &par.q)?;
    let model = SynapticModel::firing_rate(par.w.clone(), Matrix::identity(n), Activation::Tanh)?;
    let scale = 1.0 + par.p.max_abs() + par.q.max_abs() * (1.0 + par.w.max_abs());
    let mut r = Report::new(argv);
    r.feasible = margin >= -1e-8 * scale;
    r.push_certificate(CertRecord::lure("plant", Weight::Plant, &spec, &par.p, &par.q.diag(), margin));
    r.model = Some(ModelFile::from_model(&model));
    r.detail("generator", GENERATOR);
    r.detail("seed", seed);
    r.detail("eps", a.eps);
    Ok(r)
}

fn parameterize_cmd(a: &ParameterizeArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    if a.dim == 0 || a.dim > 256 {
        return Err(CliError::input(format!("--dim: must lie in 1..=256, got {}", a.dim)));
    }
    if !(0.0..1.0).contains(&a.rate) {
        return Err(CliError::input(format!("--rate: must lie in [0, 1), got {}", a.rate)));
    }
    positive("--eps", a.eps)?;
    if a.count == 0 {
        return Err(CliError::input("--count: must be positive"));
    }
    let seeds: Vec<u64> = (0..a.count as u64).map(|i| a.seed.wrapping_add(i)).collect();
    let mut results = parallel_map(&seeds, a.jobs.jobs, |&s| parameterized_instance(s, a, &ctx.argv));
    if a.count == 1 {
        let r = results.pop().expect("one instance")?;
        let code = if r.feasible { 0 } else { 3 };
        return Ok(ctx.finish(r, code));
    }
    let mut code = 0;
    let instances: Vec<serde_json::Value> = results
        .into_iter()
        .zip(&seeds)
        .map(|(res, seed)| match res {
            Ok(r) => {
                if !r.feasible {
                    code = code.max(3);
                }
                serde_json::to_value(r).unwrap_or_default()
            }
            Err(e) => {
                code = code.max(e.exit_code());
                json!({"seed": seed, "feasible": false, "error": e.to_string()})
            }
        })
        .collect();
    let body = json!({
        "command": ctx.argv,
        "generator": GENERATOR,
        "seed": a.seed,
        "count": a.count,
        "instances": instances,
        "wall_time_s": ctx.started.elapsed().as_secs_f64(),
    });
    Ok(Outcome { body: format!("{}\n", serde_json::to_string_pretty(&body)?), code })
}

fn simulate_cmd(a: &SimulateArgs) -> Result<Outcome, CliError> {
    let model = load_model(&a.model)?;
    let init: InitFile = match &a.init {
        Some(p) => read(p)?,
        None => InitFile::default(),
    };
    let (n, m, p) = (model.n(), model.m(), model.p());
    let cfg = sim_config(a.time.horizon, a.time.dt.unwrap_or_else(|| model.default_dt()), a.time.every)?;
    let x0 = vector("x0", &init.x0, n)?;
    let signal = |dim: usize| -> Result<PiecewiseConstant, CliError> {
        match &a.reference {
            Some(path) => read::<SignalFile>(path)?.to_signal(dim, &path.display().to_string()),
            None => Ok(PiecewiseConstant::constant(vec![0.0; dim])),
        }
    };
    let traj = match &a.gains {
        Some(gp) => {
            let g = load_gains(gp, &model)?;
            let xi0 = vector("xi0", &init.xi0, n)?;
            let u0 = vector("u0", &init.u0, m)?;
            simulate_closed_loop(&model, &g, &signal(p)?, &x0, &xi0, &u0, &cfg)?
        }
        None => {
            let input = signal(m)?;
            simulate(&model, &|t| input.value(t).to_vec(), &x0, &cfg)?
        }
    };
    if traj.diverged {
        eprintln!("warning: trajectory diverged");
    }
    Ok(Outcome { body: traj.to_csv(), code: 0 })
}

fn verify_cmd(a: &VerifyArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let tol = finite("--tol", a.tol)?;
    let stored: Report = read(&a.report)?;
    let model = load_model(&a.model)?;
    let gains = stored.gains.clone().unwrap_or_default().to_gain_set(&model).map_err(|e| e.context("gains"))?;
    if stored.certificates.is_empty() {
        return Err(CliError::input(format!("{}: report carries no certificate", a.report.display())));
    }
    let mut r = ctx.report();
    let mut checks = Vec::new();
    let mut all = true;
    for rec in &stored.certificates {
        let again = rec.recompute(&model, &gains)?;
        let diff = (again - rec.margin).abs();
        let ok = diff <= tol;
        all &= ok;
        checks.push(json!({"name": rec.name, "stored": rec.margin, "recomputed": again, "difference": diff, "ok": ok}));
    }
    r.feasible = all;
    r.detail("tol", tol);
    r.detail("checks", checks);
    if !all {
        r.error = Some("a recomputed margin differs from the stored one".into());
    }
    Ok(ctx.finish(r, if all { 0 } else { 1 }))
}

fn scenario_for(kind: ScenarioKind, n: usize, rng: &mut ChaCha8Rng) -> Scenario {
    let mut v = |sd: f64| gaussian(rng, n, 1, sd).into_vec();
    match kind {
        ScenarioKind::Nominal => Scenario::Nominal,
        ScenarioKind::ModelError => {
            let theta = v(0.3);
            let theta_hat = theta.iter().zip(v(0.1)).map(|(a, b)| a + b).collect();
            Scenario::ModelError { theta, theta_hat }
        }
        ScenarioKind::Moving => Scenario::Moving { theta0: v(0.2), amplitude: v(0.2), omega: 0.7 },
    }
}

fn check_bounds_cmd(a: &CheckBoundsArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let model = load_model(&a.model)?;
    require_fr_cts(&model, &a.model)?;
    let g = load_gains(&a.gains, &model)?;
    let k = separation_constants(&model, &g)?;
    let tol = finite("--tol", a.tol)?;
    if a.runs == 0 {
        return Err(CliError::input("--runs: must be positive"));
    }
    let (n, m, p) = (model.n(), model.m(), model.p());
    let scenario = scenario_for(a.scenario, n, &mut ChaCha8Rng::seed_from_u64(a.seed));
    let w_cl = &model.w + &model.b.matmul(&g.k_f);
    let w_o = &model.w - &g.l.matmul(&model.c);
    let dt = match a.dt {
        Some(dt) => dt,
        None => 0.02 / sigma_max(&w_cl)?.max(sigma_max(&w_o)?).max(1.0),
    };
    let cfg = sim_config(a.horizon, dt, 1)?;
    let cfg = cfg.every(((a.horizon / dt) as usize / 600).max(1));
    let reference = PiecewiseConstant::constant(vec![0.0; p]);
    let seeds: Vec<u64> = (1..=a.runs as u64).map(|i| a.seed.wrapping_add(i)).collect();
    let runs = parallel_map(&seeds, a.jobs.jobs, |&s| -> Result<serde_json::Value, CliError> {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let x0 = gaussian(&mut rng, n, 1, 1.0).into_vec();
        let xi0 = gaussian(&mut rng, n, 1, 1.0).into_vec();
        let u0 = gaussian(&mut rng, m, 1, 0.5).into_vec();
        let traj = simulate_closed_loop_with(&model, &g, &reference, &scenario, &x0, &xi0, &u0, &cfg)?;
        let rep = check_separation_bounds(&traj, &model, &g, &scenario, &k, tol)?;
        Ok(json!({
            "seed": s,
            "passed": rep.passed() && !traj.diverged,
            "diverged": traj.diverged,
            "samples": rep.samples,
            "violations": rep.violations,
            "max_ratio_observer": rep.max_ratio_observer,
            "max_ratio_state": rep.max_ratio_state,
            "first_violation": rep.first_violation.map(|v| json!({
                "time": v.time, "kind": format!("{:?}", v.kind), "value": v.value, "bound": v.bound,
            })),
        }))
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    let all = runs.iter().all(|r| r["passed"] == json!(true));
    let mut r = ctx.report();
    r.feasible = all;
    r.detail("generator", GENERATOR);
    r.detail("seed", a.seed);
    r.detail("scenario", format!("{:?}", a.scenario));
    r.detail("tol", tol);
    r.detail("runs", runs);
    if !all {
        r.error = Some("an error bound was violated".into());
    }
    Ok(ctx.finish(r, if all { 0 } else { 1 }))
}
