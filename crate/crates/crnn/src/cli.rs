use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "crnn", version, about = "Contraction certificates and controller synthesis for recurrent networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Certify contraction of a model at a given rate.
    Certify(CertifyArgs),
    /// Best certifiable rate by bisection.
    MaxRate(MaxRateArgs),
    /// Synthesize feedback, observer or integral gains.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Admissible integral gain ε and the comparison matrix for a gain set.
    EpsilonBound(EpsilonArgs),
    /// Compose a network file into one model and certify it.
    Interconnect(InterconnectArgs),
    /// Certify or simulate a graph network.
    #[command(subcommand)]
    Graph(GraphCommand),
    /// Generate random weights that certify by construction.
    Parameterize(ParameterizeArgs),
    /// Simulate a model, open loop or with a gain file.
    Simulate(SimulateArgs),
    /// Recompute the margins stored in a report.
    Verify(VerifyArgs),
    /// Check the observer and state error bounds on random runs.
    CheckBounds(CheckBoundsArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Nonlin {
    Cone,
    Mone,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Arch {
    Fr,
    Hopfield,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Time {
    Cts,
    Disc,
}

/// Certificate class; `--arch` and `--time` override the model file.
#[derive(Args, Debug)]
pub struct SpecArgs {
    #[arg(long, value_enum, default_value = "mone")]
    pub nonlin: Nonlin,
    #[arg(long, value_enum)]
    pub arch: Option<Arch>,
    #[arg(long, value_enum)]
    pub time: Option<Time>,
}

#[derive(Args, Debug)]
pub struct Output {
    /// Report path; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Contraction rate c (continuous time).
    #[arg(long)]
    pub rate: Option<f64>,
    /// Contraction factor ρ (discrete time).
    #[arg(long)]
    pub factor: Option<f64>,
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct MaxRateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Bisection tolerance on the rate.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Subcommand, Debug)]
pub enum SynthCommand {
    /// State feedback `u = K_f x` certifying `W + B·K_f` at `--rate`.
    Feedback(SynthArgs),
    /// Observer gain `L` certifying `W − L·C` at `--rate`.
    Observer(SynthArgs),
    /// Full tracking design: feedback, observer, integral gain and ε.
    Integral(IntegralArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub rate: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct IntegralArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Feedback rate c_K.
    #[arg(long)]
    pub rate: f64,
    /// Observer rate c_O; defaults to `--rate`.
    #[arg(long)]
    pub observer_rate: Option<f64>,
    /// Reduced-dynamics rate c_r; defaults to 90% of the largest feasible.
    #[arg(long)]
    pub integral_rate: Option<f64>,
    /// Lower activation slope δ on the operating region; searched if absent.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Integral gain ε; defaults to half the admissible bound.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct EpsilonArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub gains: PathBuf,
    /// ε to test; defaults to the one in the gain file.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct InterconnectArgs {
    /// Network file with `subsystems` and `coupling`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub rate: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Subcommand, Debug)]
pub enum GraphCommand {
    /// Certify the node model with the graph side condition.
    Certify(GraphCertifyArgs),
    /// Simulate the graph network.
    Simulate(GraphSimulateArgs),
}

#[derive(Args, Debug)]
pub struct GraphCertifyArgs {
    /// Node model; `W` and `B` are used.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub adjacency: PathBuf,
    #[arg(long)]
    pub rate: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct GraphSimulateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub adjacency: PathBuf,
    /// Initial node states `X0` and inputs `U`; zero if absent.
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[command(flatten)]
    pub time: TimeArgs,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct TimeArgs {
    #[arg(long, default_value_t = 10.0)]
    pub horizon: f64,
    /// Step size; derived from the model if absent.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Record every k-th step.
    #[arg(long, default_value_t = 1)]
    pub every: usize,
}

#[derive(Args, Debug)]
pub struct ParameterizeArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.5)]
    pub rate: f64,
    /// Regularization ε of the free parameterization.
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// Number of instances, seeded `seed, seed + 1, …`.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[command(flatten)]
    pub jobs: Jobs,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct Jobs {
    /// Worker threads for independent items; 0 uses all cores.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Gain file or report; closed loop if given.
    #[arg(long)]
    pub gains: Option<PathBuf>,
    /// Piecewise-constant reference (closed loop) or input (open loop).
    #[arg(long = "ref")]
    pub reference: Option<PathBuf>,
    /// Initial states `x0`, `xi0`, `u0`; zero if absent.
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[command(flatten)]
    pub time: TimeArgs,
    /// Trajectory path; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScenarioKind {
    Nominal,
    ModelError,
    Moving,
}

#[derive(Args, Debug)]
pub struct CheckBoundsArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub gains: PathBuf,
    #[arg(long, value_enum, default_value = "nominal")]
    pub scenario: ScenarioKind,
    #[arg(long, default_value_t = 5)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Relative slack on the bounds.
    #[arg(long, default_value_t = 5e-2)]
    pub tol: f64,
    #[arg(long, default_value_t = 30.0)]
    pub horizon: f64,
    #[arg(long)]
    pub dt: Option<f64>,
    #[command(flatten)]
    pub jobs: Jobs,
    #[command(flatten)]
    pub output: Output,
}

impl Command {
    /// Where the result goes.
    pub fn out(&self) -> Option<&std::path::Path> {
        let o = match self {
            Command::Certify(a) => &a.output,
            Command::MaxRate(a) => &a.output,
            Command::Synth(SynthCommand::Feedback(a) | SynthCommand::Observer(a)) => &a.output,
            Command::Synth(SynthCommand::Integral(a)) => &a.output,
            Command::EpsilonBound(a) => &a.output,
            Command::Interconnect(a) => &a.output,
            Command::Graph(GraphCommand::Certify(a)) => &a.output,
            Command::Graph(GraphCommand::Simulate(a)) => &a.output,
            Command::Parameterize(a) => &a.output,
            Command::Simulate(a) => return a.out.as_deref(),
            Command::Verify(a) => &a.output,
            Command::CheckBounds(a) => &a.output,
        };
        o.out.as_deref()
    }
}
