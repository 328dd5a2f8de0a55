//! Interconnected and graph-structured firing-rate networks.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::certificates::{
    certificate_margin, certify, CertError, Certificate, CertificateSpec, ModelKind, TimeDomain,
};
use crate::linalg::{
    inverse, max_eig, min_eig, sigma_min, sym_eigen, DiagPosMatrix, LinalgError, Matrix, SymMatrix,
};
use crate::lmi::{solve_feasibility, AffineExpr, SolveOptions};
use crate::sim::{rk4_step, Activation, SimConfig, SimError, SynapticModel, Trajectory};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetworkError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("interconnection is ill-posed: σ_min(I − 𝐀D) = {sigma_min:.3e}")]
    IllPosed { sigma_min: f64 },
    #[error("adjacency eigenvalue {value} outside [0, 1]")]
    Spectrum { value: f64 },
    #[error("node {node} has zero degree")]
    ZeroDegree { node: usize },
    #[error("principal block {block} fails its certificate with margin {margin:.3e}")]
    BlockInconsistent { block: usize, margin: f64 },
    #[error(transparent)]
    Cert(#[from] CertError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl From<LinalgError> for NetworkError {
    fn from(e: LinalgError) -> Self {
        NetworkError::Cert(e.into())
    }
}

/// Subsystems coupled by `u_i = Σ_j A_ij y_j`.
#[derive(Clone, Debug)]
pub struct Interconnection {
    pub subsystems: Vec<SynapticModel>,
    /// Block matrix `𝐀` of size `(Σ m_i) × (Σ p_j)`.
    pub coupling: Matrix,
}

/// Minimum admissible `σ_min(I − 𝐀D)`.
pub const WELL_POSED_MARGIN: f64 = 1e-8;

impl Interconnection {
    pub fn new(subsystems: Vec<SynapticModel>, coupling: Matrix) -> Result<Self, NetworkError> {
        if subsystems.is_empty() {
            return Err(NetworkError::InvalidInput("no subsystems".into()));
        }
        for (i, s) in subsystems.iter().enumerate() {
            if s.kind != ModelKind::FiringRate || s.domain != TimeDomain::Continuous {
                return Err(NetworkError::InvalidInput(format!(
                    "subsystem {i} must be a continuous firing-rate model"
                )));
            }
        }
        let m: usize = subsystems.iter().map(|s| s.m()).sum();
        let p: usize = subsystems.iter().map(|s| s.p()).sum();
        if coupling.shape() != (m, p) {
            return Err(NetworkError::InvalidInput(format!(
                "coupling: expected shape {:?}, found {:?}",
                (m, p),
                coupling.shape()
            )));
        }
        Ok(Self { subsystems, coupling })
    }

    fn stacked(&self) -> (Matrix, Matrix, Matrix, Matrix) {
        let s = &self.subsystems;
        (
            Matrix::block_diag(&s.iter().map(|x| x.w.clone()).collect::<Vec<_>>()),
            Matrix::block_diag(&s.iter().map(|x| x.b.clone()).collect::<Vec<_>>()),
            Matrix::block_diag(&s.iter().map(|x| x.c.clone()).collect::<Vec<_>>()),
            Matrix::block_diag(&s.iter().map(|x| x.d.clone()).collect::<Vec<_>>()),
        )
    }

    /// State, input and output offsets of each subsystem.
    pub fn offsets(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::with_capacity(self.subsystems.len());
        let (mut n, mut m, mut p) = (0, 0, 0);
        for s in &self.subsystems {
            out.push((n, m, p));
            n += s.n();
            m += s.m();
            p += s.p();
        }
        out
    }

    /// `(I − 𝐀D)⁻¹` and `Δ = (I − 𝐀D)⁻¹𝐀`.
    pub fn delta(&self) -> Result<(Matrix, Matrix), NetworkError> {
        let (_, _, _, d) = self.stacked();
        let m = self.coupling.rows();
        let lhs = &Matrix::identity(m) - &self.coupling.matmul(&d);
        let s = if m == 0 { 1.0 } else { sigma_min(&lhs)? };
        if s < WELL_POSED_MARGIN {
            return Err(NetworkError::IllPosed { sigma_min: s });
        }
        let inv = inverse(&lhs)?;
        let delta = inv.matmul(&self.coupling);
        Ok((inv, delta))
    }
}

/// Composed network as a single firing-rate model.
///
/// External inputs `v` enter as `u = 𝐀y + v`, giving `B_net = B(I − 𝐀D)⁻¹`,
/// `C_net = C + DΔC` and `D_net = D(I − 𝐀D)⁻¹`.
pub fn interconnect(ic: &Interconnection) -> Result<SynapticModel, NetworkError> {
    let (w, b, c, d) = ic.stacked();
    let (inv, delta) = ic.delta()?;
    let dc = delta.matmul(&c);
    let w_net = &w + &b.matmul(&dc);
    let c_net = &c + &d.matmul(&dc);
    let act = ic.subsystems[0].activation;
    if ic.subsystems.iter().any(|s| s.activation != act) {
        return Err(NetworkError::InvalidInput("subsystems must share one activation".into()));
    }
    Ok(SynapticModel::new(
        ModelKind::FiringRate,
        TimeDomain::Continuous,
        w_net,
        b.matmul(&inv),
        c_net,
        d.matmul(&inv),
        act,
    )?)
}

/// FR/CTS/MONE certificate of the composed network.
pub fn certify_network(ic: &Interconnection, c: f64, opts: &SolveOptions) -> Result<Certificate, NetworkError> {
    let net = interconnect(ic)?;
    Ok(certify(&net.w, &CertificateSpec::fr_cts_mone(c), opts)?)
}

/// Subsystem weight `W_i + B_iΔ_iiC_i` seen under static output feedback.
pub fn subsystem_weights(ic: &Interconnection) -> Result<Vec<Matrix>, NetworkError> {
    let (_, delta) = ic.delta()?;
    Ok(ic
        .subsystems
        .iter()
        .zip(ic.offsets())
        .map(|(s, (_, m0, p0))| {
            let dii = delta.submatrix(m0, p0, s.m(), s.p());
            &s.w + &s.b.matmul(&dii).matmul(&s.c)
        })
        .collect())
}

/// Extracts the principal blocks of a network certificate and verifies each
/// subsystem inequality at the network rate.
pub fn block_necessary_check(net_cert: &Certificate, ic: &Interconnection) -> Result<Vec<Certificate>, NetworkError> {
    let weights = subsystem_weights(ic)?;
    let spec = net_cert.spec;
    let mut out = Vec::with_capacity(weights.len());
    for (i, ((w_i, s), (n0, _, _))) in weights.iter().zip(&ic.subsystems).zip(ic.offsets()).enumerate() {
        let ni = s.n();
        let p_ii = net_cert.p.matrix().submatrix(n0, n0, ni, ni);
        let q_i = DiagPosMatrix::new(net_cert.q.entries()[n0..n0 + ni].to_vec())?;
        let margin = certificate_margin(w_i, &spec, &p_ii, &q_i.to_matrix())?;
        if margin < -1e-8 {
            return Err(NetworkError::BlockInconsistent { block: i, margin });
        }
        out.push(Certificate { spec, p: SymMatrix::new(p_ii)?, q: q_i, margin, iterations: 0 });
    }
    Ok(out)
}

/// Subsystems whose output-feedback weight admits no certificate at rate `c`.
pub fn obstructing_blocks(ic: &Interconnection, c: f64, opts: &SolveOptions) -> Result<Vec<usize>, NetworkError> {
    let mut bad = Vec::new();
    for (i, w_i) in subsystem_weights(ic)?.iter().enumerate() {
        match certify(w_i, &CertificateSpec::fr_cts_mone(c), opts) {
            Ok(_) => {}
            Err(CertError::Infeasible { .. }) => bad.push(i),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(bad)
}

/// `½(D̃^{−1/2}ÃD̃^{−1/2} + I)` for a symmetric nonnegative `Ã`.
pub fn normalize_adjacency(raw: &Matrix) -> Result<SymMatrix, NetworkError> {
    if !raw.is_square() || raw.rows() == 0 {
        return Err(NetworkError::InvalidInput(format!("adjacency must be square, got {:?}", raw.shape())));
    }
    if raw.asymmetry() > 1e-10 {
        return Err(NetworkError::InvalidInput("adjacency must be symmetric".into()));
    }
    if raw.as_slice().iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(NetworkError::InvalidInput("adjacency must be finite and nonnegative".into()));
    }
    let n = raw.rows();
    let mut s = Vec::with_capacity(n);
    for i in 0..n {
        let deg: f64 = raw.row(i).iter().sum();
        if deg <= 0.0 {
            return Err(NetworkError::ZeroDegree { node: i });
        }
        s.push(1.0 / crate::math::sqrt(deg));
    }
    let a = Matrix::from_fn(n, n, |i, j| 0.5 * (s[i] * raw[(i, j)] * s[j] + if i == j { 1.0 } else { 0.0 }));
    let a = SymMatrix::new(a)?;
    check_spectrum(&sym_eigen(a.matrix())?.values)?;
    Ok(a)
}

fn check_spectrum(values: &[f64]) -> Result<(), NetworkError> {
    for &v in values {
        if !(-1e-9..=1.0 + 1e-9).contains(&v) {
            return Err(NetworkError::Spectrum { value: v });
        }
    }
    Ok(())
}

/// Graph network `Ẋ = −X + Ψ(WXA + BU)` with `X ∈ ℝ^{m×n}`.
#[derive(Clone, Debug)]
pub struct GraphModel {
    pub w: Matrix,
    pub b: Matrix,
    pub adjacency: Matrix,
    pub activation: Activation,
}

impl GraphModel {
    pub fn new(w: Matrix, b: Matrix, adjacency: Matrix, activation: Activation) -> Result<Self, NetworkError> {
        if !w.is_square() || b.rows() != w.rows() || !adjacency.is_square() {
            return Err(NetworkError::InvalidInput(format!(
                "nonconformable graph model: W {:?}, B {:?}, A {:?}",
                w.shape(),
                b.shape(),
                adjacency.shape()
            )));
        }
        Ok(Self { w, b, adjacency, activation })
    }

    /// Neurons per node.
    pub fn m(&self) -> usize {
        self.w.rows()
    }

    pub fn nodes(&self) -> usize {
        self.adjacency.rows()
    }

    /// Synaptic matrix `Aᵀ ⊗ W` of the vectorized model.
    pub fn kron_weight(&self) -> Matrix {
        self.adjacency.transpose().kron(&self.w)
    }
}

/// Which graph assumption to certify under.
#[derive(Clone, Debug)]
pub enum GraphVariant {
    Undirected,
    /// `A = H·D⁻¹` with `H` symmetric and `D` positive diagonal.
    Symmetrizable { h: Matrix, d: DiagPosMatrix },
}

/// Certificate for a graph network: node weight `(P, Q)` at rate `c`, plus the
/// metric on the stacked state.
#[derive(Clone, Debug)]
pub struct GraphCertificate {
    pub p: SymMatrix,
    pub q: DiagPosMatrix,
    pub c: f64,
    /// `I ⊗ P` or `D ⊗ P`.
    pub metric: Matrix,
    /// Margin of the node certificate block.
    pub margin: f64,
    /// Margin of the `λ = 0` side block `[[−4(1−c)P, P], [P, −Q]]`.
    pub side_margin: f64,
}

/// Side block `[[−4(1−c)P, P], [P, −Q]]`, the Schur form of `PQ⁻¹P ⪯ 4(1−c)P`.
pub fn graph_side_block(p: &Matrix, q: &Matrix, c: f64) -> Matrix {
    Matrix::block2(&p.scale(-4.0 * (1.0 - c)), p, p, &q.scale(-1.0))
}

fn graph_preconditions(g: &GraphModel, variant: &GraphVariant) -> Result<Option<Matrix>, NetworkError> {
    let a = &g.adjacency;
    let n = a.rows();
    match variant {
        GraphVariant::Undirected => {
            if a.asymmetry() > 1e-9 {
                return Err(NetworkError::InvalidInput("adjacency is not symmetric".into()));
            }
            check_spectrum(&sym_eigen(a)?.values)?;
            Ok(None)
        }
        GraphVariant::Symmetrizable { h, d } => {
            if h.shape() != (n, n) || d.dim() != n {
                return Err(NetworkError::InvalidInput("H and D must match the adjacency size".into()));
            }
            if h.asymmetry() > 1e-9 {
                return Err(NetworkError::InvalidInput("H is not symmetric".into()));
            }
            let hd = d.inverse().mul_right(h);
            if !hd.approx_eq(a, 1e-9) {
                return Err(NetworkError::InvalidInput("A differs from H·D⁻¹".into()));
            }
            // Spectrum of A equals that of D^{−1/2} H D^{−1/2}.
            let s = d.inverse().sqrt();
            let hbar = s.mul_right(&s.mul_left(h));
            check_spectrum(&sym_eigen(&hbar)?.values)?;
            Ok(Some(d.to_matrix()))
        }
    }
}

/// Solves the node certificate jointly with the `λ = 0` side block.
pub fn graph_certify(
    g: &GraphModel,
    c: f64,
    variant: &GraphVariant,
    opts: &SolveOptions,
) -> Result<GraphCertificate, NetworkError> {
    let degree = graph_preconditions(g, variant)?;
    let spec = CertificateSpec::fr_cts_mone(c);
    let mut lure = crate::certificates::certificate_lmi(&g.w, &spec)?;
    let pe = lure.lmi.expr(lure.p);
    let qe = lure.lmi.expr(lure.q);
    lure.lmi.add_nsd("λ = 0 side", AffineExpr::sym2(&pe.scale(-4.0 * (1.0 - c)), &pe, &qe.neg()));
    let r = solve_feasibility(&lure.lmi, opts).map_err(CertError::from)?;
    if !r.feasible() {
        return Err(CertError::from_result(&r).into());
    }
    let p = lure.lmi.value(&r.x, lure.p);
    let q = lure.lmi.value(&r.x, lure.q);
    let margin = certificate_margin(&g.w, &spec, &p, &q)?;
    let side_margin = -max_eig(&graph_side_block(&p, &q, c))?;
    let floor = if opts.target_margin > 0.0 { 0.0 } else { -1e-9 };
    if margin.min(side_margin) < floor {
        return Err(CertError::Verification { margin: margin.min(side_margin) }.into());
    }
    let metric = degree.unwrap_or_else(|| Matrix::identity(g.nodes())).kron(&p);
    Ok(GraphCertificate {
        p: SymMatrix::new(p)?,
        q: DiagPosMatrix::new(q.diag())?,
        c,
        metric,
        margin,
        side_margin,
    })
}

/// FR/CTS/MONE block for `Aᵀ ⊗ W` with weights `I ⊗ P`, `I ⊗ Q`.
pub fn kron_certificate_block(g: &GraphModel, p: &Matrix, q: &Matrix, c: f64) -> Matrix {
    let n = g.nodes();
    let i_n = Matrix::identity(n);
    crate::certificates::table_block(&g.kron_weight(), &CertificateSpec::fr_cts_mone(c), &i_n.kron(p), &i_n.kron(q))
}

/// Per-eigenvalue blocks `[[−2(1−c)P, P + λWᵀQ], [P + λQW, −2Q]]`.
pub fn eigen_blocks(g: &GraphModel, p: &Matrix, q: &Matrix, c: f64) -> Result<Vec<(f64, Matrix)>, NetworkError> {
    let vals = sym_eigen(&g.adjacency)?.values;
    let qw = q.matmul(&g.w);
    Ok(vals
        .into_iter()
        .map(|lam| {
            let off = p + &qw.transpose().scale(lam);
            (lam, Matrix::block2(&p.scale(-2.0 * (1.0 - c)), &off, &off.transpose(), &q.scale(-2.0)))
        })
        .collect())
}

/// `(λ_min, λ_max)`.
pub type Extremes = (f64, f64);

/// Extreme eigenvalues `(min, max)` of the full Kronecker block and of the
/// union of per-eigenvalue blocks.
pub fn kron_decomposition_gap(g: &GraphModel, p: &Matrix, q: &Matrix, c: f64) -> Result<(Extremes, Extremes), NetworkError> {
    let full = kron_certificate_block(g, p, q, c);
    let full_ext = (min_eig(&full)?, max_eig(&full)?);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (_, b) in eigen_blocks(g, p, q, c)? {
        lo = lo.min(min_eig(&b)?);
        hi = hi.max(max_eig(&b)?);
    }
    Ok((full_ext, (lo, hi)))
}

/// Matrix-form simulation with `W·X·A` products; the state is stored as
/// `vec(X)` (columns stacked).
pub fn simulate_graph(g: &GraphModel, u: &Matrix, x0: &Matrix, cfg: &SimConfig) -> Result<Trajectory, NetworkError> {
    let (m, n) = (g.m(), g.nodes());
    if x0.shape() != (m, n) || u.shape() != (g.b.cols(), n) {
        return Err(NetworkError::InvalidInput(format!(
            "X0 must be {m}×{n} and U {}×{n}",
            g.b.cols()
        )));
    }
    let bu = g.b.matmul(u);
    let field = |_t: f64, v: &[f64]| -> Vec<f64> {
        let x = Matrix::from_vec_cols(m, n, v);
        let mut z = g.w.matmul(&x).matmul(&g.adjacency);
        for (zi, bi) in z.as_mut_slice().iter_mut().zip(bu.as_slice()) {
            *zi = g.activation.apply(*zi + bi);
        }
        let z = z.vec_cols();
        z.iter().zip(v).map(|(a, b)| a - b).collect()
    };
    let steps = cfg.steps()?;
    let every = cfg.record_every.max(1);
    let mut v = x0.vec_cols();
    let mut traj = Trajectory::default();
    traj.push(0.0, v.clone(), vec![], vec![], vec![]);
    for k in 0..steps {
        v = rk4_step(&field, k as f64 * cfg.dt, &v, cfg.dt);
        let bad = v.iter().any(|x| !x.is_finite()) || crate::linalg::norm2(&v) > crate::sim::DIVERGENCE_NORM;
        if (k + 1) % every == 0 || k + 1 == steps || bad {
            traj.push((k + 1) as f64 * cfg.dt, v.clone(), vec![], vec![], vec![]);
        }
        if bad {
            traj.diverged = true;
            break;
        }
    }
    Ok(traj)
}

/// The vectorized graph model as a plain firing-rate network with input `vec(BU)`.
pub fn vectorized_model(g: &GraphModel) -> Result<SynapticModel, NetworkError> {
    let nm = g.m() * g.nodes();
    Ok(SynapticModel::new(
        ModelKind::FiringRate,
        TimeDomain::Continuous,
        g.kron_weight(),
        Matrix::identity(nm),
        Matrix::identity(nm),
        Matrix::zeros(nm, nm),
        g.activation,
    )?)
}
