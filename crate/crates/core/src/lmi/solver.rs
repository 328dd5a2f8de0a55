//! Primal barrier method for maximizing the worst block margin.
//!
//! Solves `min t  s.t.  F_j(x) ⪯ t·I` for every block, with linear equalities
//! eliminated up front and a large norm box on every variable so that the
//! barrier has a minimizer even when the margin supremum is not attained.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::{verify_assignment, AffineExpr, AffineLmi, LmiError, VarKind};
use crate::linalg::{cholesky, max_eig, Matrix};
use crate::math;

/// Solver configuration.
#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Required worst margin. Zero means non-strict, accepted at `−1e-9`.
    pub target_margin: f64,
    /// Newton step budget.
    pub max_newton: usize,
    /// Keep improving the margin after the target is met.
    pub maximize: bool,
    /// Spectral-norm bound imposed on every variable.
    pub box_radius: f64,
    /// Relative duality-gap tolerance used when maximizing.
    pub gap_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { target_margin: 1e-6, max_newton: 50_000, maximize: false, box_radius: 1e6, gap_tol: 1e-7 }
    }
}

impl SolveOptions {
    pub fn with_target(target_margin: f64) -> Self {
        Self { target_margin, ..Self::default() }
    }

    pub fn maximizing() -> Self {
        Self { maximize: true, ..Self::default() }
    }

    fn accept_level(&self) -> f64 {
        if self.target_margin > 0.0 {
            self.target_margin
        } else {
            -1e-9
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Feasible,
    Infeasible,
    BudgetExhausted,
}

/// Outcome of a feasibility solve.
#[derive(Clone, Debug)]
pub struct FeasResult {
    pub status: SolveStatus,
    /// Best assignment found (flat decision vector).
    pub x: Vec<f64>,
    /// Independently verified worst block margin of `x`.
    pub worst_margin: f64,
    /// Upper bound on the achievable margin from the barrier duality gap.
    pub margin_upper_bound: f64,
    pub iterations: usize,
}

impl FeasResult {
    pub fn feasible(&self) -> bool {
        self.status == SolveStatus::Feasible
    }
}

struct ReducedBlock {
    dim: usize,
    has_t: bool,
    c: Matrix,
    e: Vec<(usize, Matrix)>,
}

struct Reduction {
    /// x = x0 + N z; pivots hold the dependent coordinates.
    x0: Vec<f64>,
    free: Vec<usize>,
    pivots: Vec<(usize, BTreeMap<usize, f64>)>,
}

impl Reduction {
    fn build(lmi: &AffineLmi) -> Result<Self, LmiError> {
        let n = lmi.nflat;
        // Each pivot: x_p = c_p + Σ a_k x_k over non-pivot k.
        let mut piv: Vec<(usize, f64, BTreeMap<usize, f64>)> = Vec::new();
        for eq in &lmi.equalities {
            let mut row: BTreeMap<usize, f64> = BTreeMap::new();
            for (k, a) in &eq.coeffs {
                *row.entry(*k).or_insert(0.0) += a;
            }
            let mut rhs = eq.rhs;
            for (p, cp, expr) in &piv {
                if let Some(a) = row.remove(p) {
                    rhs -= a * cp;
                    for (k, b) in expr {
                        *row.entry(*k).or_insert(0.0) += a * b;
                    }
                }
            }
            let scale = row.values().fold(0.0f64, |m, v| m.max(math::abs(*v)));
            let best = row.iter().max_by(|a, b| math::abs(*a.1).total_cmp(&math::abs(*b.1)));
            let Some((&p, &ap)) = best.filter(|_| scale > 1e-12) else {
                if math::abs(rhs) > 1e-9 {
                    return Err(LmiError::InconsistentEqualities);
                }
                continue;
            };
            let cp = rhs / ap;
            let expr: BTreeMap<usize, f64> =
                row.iter().filter(|(k, _)| **k != p).map(|(k, a)| (*k, -a / ap)).collect();
            for (_, c_old, e_old) in piv.iter_mut() {
                if let Some(a) = e_old.remove(&p) {
                    *c_old += a * cp;
                    for (k, b) in &expr {
                        *e_old.entry(*k).or_insert(0.0) += a * b;
                    }
                }
            }
            piv.push((p, cp, expr));
        }
        let mut x0 = vec![0.0; n];
        let mut is_piv = vec![false; n];
        let mut pivots = Vec::new();
        for (p, cp, expr) in piv {
            x0[p] = cp;
            is_piv[p] = true;
            pivots.push((p, expr));
        }
        let free = (0..n).filter(|k| !is_piv[*k]).collect();
        Ok(Self { x0, free, pivots })
    }

    fn x_of(&self, z: &[f64]) -> Vec<f64> {
        let mut x = self.x0.clone();
        for (i, &k) in self.free.iter().enumerate() {
            x[k] = z[i];
        }
        for (p, expr) in &self.pivots {
            let mut v = self.x0[*p];
            for (k, a) in expr {
                v += a * x[*k];
            }
            x[*p] = v;
        }
        x
    }

    fn reduce(&self, expr: &AffineExpr, has_t: bool) -> ReducedBlock {
        let d = expr.rows();
        let symm = |m: &Matrix| Matrix::from_fn(d, d, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
        let mut c = expr.constant.clone();
        for (p, _) in &self.pivots {
            if let Some(dp) = expr.terms.get(p) {
                c = &c + &dp.scale(self.x0[*p]);
            }
        }
        let zindex: BTreeMap<usize, usize> = self.free.iter().enumerate().map(|(i, k)| (*k, i)).collect();
        let mut e: BTreeMap<usize, Matrix> = BTreeMap::new();
        for (k, m) in &expr.terms {
            if let Some(z) = zindex.get(k) {
                let slot = e.entry(*z).or_insert_with(|| Matrix::zeros(d, d));
                *slot = &*slot + m;
            }
        }
        for (p, pexpr) in &self.pivots {
            if let Some(dp) = expr.terms.get(p) {
                for (k, a) in pexpr {
                    let z = zindex[k];
                    let slot = e.entry(z).or_insert_with(|| Matrix::zeros(d, d));
                    *slot = &*slot + &dp.scale(*a);
                }
            }
        }
        let e = e
            .into_iter()
            .filter(|(_, m)| m.max_abs() > 0.0)
            .map(|(z, m)| (z, symm(&m)))
            .collect();
        ReducedBlock { dim: d, has_t, c: symm(&c), e }
    }
}

fn box_blocks(lmi: &AffineLmi, r: f64) -> Vec<AffineExpr> {
    let mut out = Vec::new();
    for (i, dv) in lmi.vars.iter().enumerate() {
        let e = lmi.expr(super::Var(i));
        match dv.kind {
            VarKind::Symmetric(n) | VarKind::DiagonalPositive(n) => {
                out.push(e.sub(&AffineExpr::identity(n).scale(r)));
                if dv.floor.is_none() {
                    out.push(e.neg().sub(&AffineExpr::identity(n).scale(r)));
                }
            }
            VarKind::Rectangular(rows, cols) => {
                let a = AffineExpr::identity(rows).scale(r);
                let b = AffineExpr::identity(cols).scale(r);
                out.push(AffineExpr::sym2(&a, &e, &b).neg());
            }
            VarKind::Scalar => {
                let a = AffineExpr::identity(1).scale(r);
                out.push(AffineExpr::sym2(&a, &e, &a).neg());
            }
        }
    }
    out
}

/// `S = t·I − F(z)` for one block.
fn slack(b: &ReducedBlock, z: &[f64], t: f64) -> Matrix {
    let mut s = b.c.scale(-1.0);
    for (k, e) in &b.e {
        let v = z[*k];
        if v != 0.0 {
            for (o, x) in s.as_mut_slice().iter_mut().zip(e.as_slice()) {
                *o -= v * x;
            }
        }
    }
    if b.has_t {
        for i in 0..b.dim {
            s[(i, i)] += t;
        }
    }
    s
}

fn log_det_pd(s: &Matrix) -> Option<f64> {
    let l = cholesky(s).ok()?;
    Some(2.0 * l.diag().iter().map(|v| math::ln(*v)).sum::<f64>())
}

fn chol_inverse(s: &Matrix) -> Option<Matrix> {
    let l = cholesky(s).ok()?;
    let n = l.rows();
    // Invert L (lower triangular).
    let mut li = Matrix::zeros(n, n);
    for j in 0..n {
        li[(j, j)] = 1.0 / l[(j, j)];
        for i in (j + 1)..n {
            let mut acc = 0.0;
            for k in j..i {
                acc -= l[(i, k)] * li[(k, j)];
            }
            li[(i, j)] = acc / l[(i, i)];
        }
    }
    Some(li.tr_matmul(&li))
}

fn objective(blocks: &[ReducedBlock], z: &[f64], t: f64, mu: f64) -> Option<f64> {
    let mut f = mu * t;
    for b in blocks {
        f -= log_det_pd(&slack(b, z, t))?;
    }
    Some(f)
}

fn solve_spd(h: &Matrix, rhs: &[f64]) -> Option<Vec<f64>> {
    let n = h.rows();
    let diag_max = h.diag().iter().fold(0.0f64, |m, v| m.max(math::abs(*v))).max(1e-300);
    let mut ridge = 0.0;
    for _ in 0..12 {
        let mut hr = h.clone();
        for i in 0..n {
            hr[(i, i)] += ridge;
        }
        if let Ok(l) = cholesky(&hr) {
            let mut y = rhs.to_vec();
            for i in 0..n {
                for k in 0..i {
                    y[i] -= l[(i, k)] * y[k];
                }
                y[i] /= l[(i, i)];
            }
            for i in (0..n).rev() {
                for k in (i + 1)..n {
                    y[i] -= l[(k, i)] * y[k];
                }
                y[i] /= l[(i, i)];
            }
            if y.iter().all(|v| v.is_finite()) {
                return Some(y);
            }
        }
        ridge = if ridge == 0.0 { 1e-14 * diag_max } else { ridge * 100.0 };
    }
    None
}

/// Decides feasibility of `lmi` at the requested margin.
pub fn solve_feasibility(lmi: &AffineLmi, opts: &SolveOptions) -> Result<FeasResult, LmiError> {
    let accept = opts.accept_level();
    let x_init = lmi.initial_point();
    if lmi.blocks.is_empty() {
        return Ok(FeasResult {
            status: SolveStatus::Feasible,
            x: x_init,
            worst_margin: f64::INFINITY,
            margin_upper_bound: f64::INFINITY,
            iterations: 0,
        });
    }

    let red = Reduction::build(lmi)?;
    let nz = red.free.len();
    let mut z: Vec<f64> = red.free.iter().map(|k| x_init[*k]).collect();
    let x_start = red.x_of(&z);

    let m0 = verify_assignment(lmi, &x_start)?;
    let mut best_x = x_start.clone();
    let mut best = m0;
    if !opts.maximize && m0 >= accept {
        return Ok(FeasResult {
            status: SolveStatus::Feasible,
            x: x_start,
            worst_margin: m0,
            margin_upper_bound: f64::INFINITY,
            iterations: 0,
        });
    }

    let xmax = x_start.iter().fold(0.0f64, |m, v| m.max(math::abs(*v)));
    let radius = opts.box_radius.max(10.0 * (xmax + 1.0));
    let mut blocks: Vec<ReducedBlock> = lmi.blocks.iter().map(|b| red.reduce(&b.expr, true)).collect();
    blocks.extend(box_blocks(lmi, radius).iter().map(|e| red.reduce(e, false)));
    let m_total: f64 = blocks.iter().map(|b| b.dim as f64).sum();

    let mut t = blocks
        .iter()
        .filter(|b| b.has_t)
        .map(|b| max_eig(&slack(b, &z, 0.0).scale(-1.0)).unwrap_or(0.0))
        .fold(f64::NEG_INFINITY, f64::max);
    t += 1.0 + 0.1 * math::abs(t);

    let ny = nz + 1;
    let mut mu = 1.0;
    let mut iters = 0usize;
    let mut upper = f64::INFINITY;

    let finish = |status, x: Vec<f64>, margin, upper, iters| FeasResult {
        status,
        x,
        worst_margin: margin,
        margin_upper_bound: upper,
        iterations: iters,
    };

    loop {
        // Centering.
        loop {
            if iters >= opts.max_newton {
                let status = if best >= accept { SolveStatus::Feasible } else { SolveStatus::BudgetExhausted };
                return Ok(finish(status, best_x, best, upper, iters));
            }
            let mut g = vec![0.0; ny];
            let mut h = Matrix::zeros(ny, ny);
            g[nz] = mu;
            for b in &blocks {
                let s = slack(b, &z, t);
                let Some(si) = chol_inverse(&s) else {
                    return Err(LmiError::SolverBreakdown);
                };
                let gk: Vec<(usize, Matrix, Matrix)> = b
                    .e
                    .iter()
                    .map(|(k, e)| {
                        let gm = si.matmul(e);
                        let gt = gm.transpose();
                        (*k, gm, gt)
                    })
                    .collect();
                for (k, gm, gt) in &gk {
                    g[*k] += gm.trace();
                    for (l, gl, _) in &gk {
                        if l < k {
                            continue;
                        }
                        let v: f64 = gt.as_slice().iter().zip(gl.as_slice()).map(|(a, b)| a * b).sum();
                        h[(*k, *l)] += v;
                        if l != k {
                            h[(*l, *k)] += v;
                        }
                    }
                }
                if b.has_t {
                    g[nz] -= si.trace();
                    let fro: f64 = si.as_slice().iter().map(|v| v * v).sum();
                    h[(nz, nz)] += fro;
                    for (k, _, gt) in &gk {
                        // tr(S⁻¹ G_k) = Σ S⁻¹[a,b] G_k[b,a]
                        let v: f64 = si.as_slice().iter().zip(gt.as_slice()).map(|(a, b)| a * b).sum();
                        h[(nz, *k)] -= v;
                        h[(*k, nz)] -= v;
                    }
                }
            }
            let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
            let Some(dir) = solve_spd(&h, &neg_g) else {
                return Err(LmiError::SolverBreakdown);
            };
            let dec: f64 = -g.iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>();
            if dec.is_nan() || dec / 2.0 <= 1e-10 {
                break;
            }
            let f0 = match objective(&blocks, &z, t, mu) {
                Some(f) => f,
                None => return Err(LmiError::SolverBreakdown),
            };
            let mut step = 1.0;
            let mut accepted = false;
            while step > 1e-14 {
                let zt: Vec<f64> = z.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
                let tt = t + step * dir[nz];
                if let Some(f1) = objective(&blocks, &zt, tt, mu) {
                    if f1 <= f0 - 0.25 * step * dec {
                        z = zt;
                        t = tt;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            iters += 1;
            // A damped step at a tiny decrement is rounding noise: the point
            // is centered as well as double precision allows.
            if !accepted || (dec <= 1e-6 && step < 0.5) {
                break;
            }
            if -t >= accept && !opts.maximize {
                let x = red.x_of(&z);
                let m = verify_assignment(lmi, &x)?;
                if m > best {
                    best = m;
                    best_x = x;
                }
                if best >= accept {
                    return Ok(finish(SolveStatus::Feasible, best_x, best, upper, iters));
                }
            }
        }

        let x = red.x_of(&z);
        let m = verify_assignment(lmi, &x)?;
        if m > best {
            best = m;
            best_x = x;
        }
        let gap = 1.01 * m_total / mu;
        upper = upper.min(gap - t);
        if !opts.maximize && best >= accept {
            return Ok(finish(SolveStatus::Feasible, best_x, best, upper, iters));
        }
        if upper < accept {
            let status = if best >= accept { SolveStatus::Feasible } else { SolveStatus::Infeasible };
            return Ok(finish(status, best_x, best, upper, iters));
        }
        if opts.maximize && best >= accept && gap <= opts.gap_tol * math::abs(t).max(1.0) {
            return Ok(finish(SolveStatus::Feasible, best_x, best, upper, iters));
        }
        if mu > 1e16 {
            let status = if best >= accept { SolveStatus::Feasible } else { SolveStatus::BudgetExhausted };
            return Ok(finish(status, best_x, best, upper, iters));
        }
        mu *= 8.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lmi::DELTA_PD;

    /// Lyapunov LMI `AᵀP + PA ⪯ 0`, `P ⪰ δI`, trace-normalized.
    fn lyap(a: &Matrix) -> AffineLmi {
        let n = a.rows();
        let mut lmi = AffineLmi::new();
        let p = lmi.sym_pd("P", n, DELTA_PD);
        lmi.normalize_trace(p, n as f64);
        lmi.add_nsd("lyap", lmi.expr(p).rmul(a).he());
        lmi
    }

    #[test]
    fn stable_matrix_is_feasible_and_verified() {
        let a = Matrix::from_rows(&[[-1.0, 10.0], [0.0, -2.0]]);
        let lmi = lyap(&a);
        let r = solve_feasibility(&lmi, &SolveOptions::default()).unwrap();
        assert!(r.feasible());
        assert!(verify_assignment(&lmi, &r.x).unwrap() >= 1e-6);
        assert!(lmi.equality_residual(&r.x) < 1e-9);
    }

    #[test]
    fn unstable_matrix_is_infeasible() {
        let a = Matrix::from_rows(&[[0.1, 1.0], [0.0, -2.0]]);
        let r = solve_feasibility(&lyap(&a), &SolveOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert!(r.worst_margin < 0.0);
    }

    #[test]
    fn maximize_reaches_known_optimum() {
        // Blocks -2 diag(p1, 3 p2) and δI - P with tr P = 2: the floor block
        // binds first, at P = I, giving margin 1 - δ.
        let a = Matrix::from_diag(&[-1.0, -3.0]);
        let r = solve_feasibility(&lyap(&a), &SolveOptions::maximizing()).unwrap();
        assert!(r.feasible());
        assert!(math::abs(r.worst_margin - (1.0 - DELTA_PD)) < 1e-6, "{}", r.worst_margin);
    }

    #[test]
    fn equality_elimination_handles_chains() {
        let mut lmi = AffineLmi::new();
        let a = lmi.scalar("a");
        let b = lmi.scalar("b");
        lmi.equalities.push(super::super::problem::Equality { coeffs: vec![(0, 1.0), (1, 1.0)], rhs: 2.0 });
        lmi.equalities.push(super::super::problem::Equality { coeffs: vec![(0, 1.0), (1, -1.0)], rhs: 0.0 });
        // a ≥ 0.5, b ≥ 0.5 as blocks
        lmi.add_nsd("a", AffineExpr::identity(1).scale(0.5).sub(&lmi.expr(a)));
        lmi.add_nsd("b", AffineExpr::identity(1).scale(0.5).sub(&lmi.expr(b)));
        let r = solve_feasibility(&lmi, &SolveOptions::default()).unwrap();
        assert!(r.feasible());
        assert!(math::abs(r.x[0] - 1.0) < 1e-12 && math::abs(r.x[1] - 1.0) < 1e-12);
    }
}
