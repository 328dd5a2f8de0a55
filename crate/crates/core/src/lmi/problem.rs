use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::{AffineExpr, LmiError};
use crate::linalg::{max_eig, Matrix};

/// Shape of a decision variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Symmetric(usize),
    DiagonalPositive(usize),
    Rectangular(usize, usize),
    Scalar,
}

impl VarKind {
    /// Number of flat entries.
    pub fn len(&self) -> usize {
        match *self {
            VarKind::Symmetric(n) => n * (n + 1) / 2,
            VarKind::DiagonalPositive(n) => n,
            VarKind::Rectangular(r, c) => r * c,
            VarKind::Scalar => 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> (usize, usize) {
        match *self {
            VarKind::Symmetric(n) | VarKind::DiagonalPositive(n) => (n, n),
            VarKind::Rectangular(r, c) => (r, c),
            VarKind::Scalar => (1, 1),
        }
    }
}

/// A declared decision variable.
#[derive(Clone, Debug)]
pub struct DecisionVar {
    pub name: String,
    pub kind: VarKind,
    /// Positivity floor `δ_pd` for `X ⪰ δ_pd·I`, if required.
    pub floor: Option<f64>,
    pub(crate) offset: usize,
}

/// Handle returned when declaring a variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

/// A named block constrained `expr ⪯ 0`.
#[derive(Clone, Debug)]
pub struct Block {
    pub name: String,
    pub expr: AffineExpr,
}

/// Linear equality `Σ a_k x_k = b` on the flat vector.
#[derive(Clone, Debug)]
pub(crate) struct Equality {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// System of symmetric block inequalities affine in declared variables.
///
/// Every block is stored in the `⪯ 0` sense. Positivity floors of `P`- and
/// `Q`-type variables become additional blocks `δ_pd·I − X ⪯ 0`.
#[derive(Clone, Debug, Default)]
pub struct AffineLmi {
    pub(crate) vars: Vec<DecisionVar>,
    pub(crate) blocks: Vec<Block>,
    pub(crate) equalities: Vec<Equality>,
    pub(crate) nflat: usize,
}

/// Default positivity floor for `P ≻ 0`, `Q ≻ 0`.
pub const DELTA_PD: f64 = 1e-6;

impl AffineLmi {
    pub fn new() -> Self {
        Self::default()
    }

    fn declare(&mut self, name: &str, kind: VarKind, floor: Option<f64>) -> Var {
        let (r, c) = kind.shape();
        assert!(r >= 1 && c >= 1, "variable {name} has an empty dimension");
        let v = DecisionVar { name: name.to_string(), kind, floor, offset: self.nflat };
        self.nflat += kind.len();
        self.vars.push(v);
        let id = Var(self.vars.len() - 1);
        if let Some(delta) = floor {
            let e = self.expr(id);
            let n = r;
            let block = AffineExpr::identity(n).scale(delta).sub(&e);
            self.blocks.push(Block { name: alloc::format!("{name} ⪰ δI"), expr: block });
        }
        id
    }

    /// Symmetric `n×n` variable with `X ⪰ floor·I`.
    pub fn sym_pd(&mut self, name: &str, n: usize, floor: f64) -> Var {
        self.declare(name, VarKind::Symmetric(n), Some(floor))
    }

    /// Unconstrained symmetric variable.
    pub fn sym(&mut self, name: &str, n: usize) -> Var {
        self.declare(name, VarKind::Symmetric(n), None)
    }

    /// Diagonal variable with entries `≥ floor`.
    pub fn diag_pd(&mut self, name: &str, n: usize, floor: f64) -> Var {
        self.declare(name, VarKind::DiagonalPositive(n), Some(floor))
    }

    pub fn rect(&mut self, name: &str, rows: usize, cols: usize) -> Var {
        self.declare(name, VarKind::Rectangular(rows, cols), None)
    }

    pub fn scalar(&mut self, name: &str) -> Var {
        self.declare(name, VarKind::Scalar, None)
    }

    pub fn var(&self, v: Var) -> &DecisionVar {
        &self.vars[v.0]
    }

    pub fn vars(&self) -> &[DecisionVar] {
        &self.vars
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn num_flat(&self) -> usize {
        self.nflat
    }

    /// The variable as an affine expression.
    pub fn expr(&self, v: Var) -> AffineExpr {
        let dv = &self.vars[v.0];
        let (r, c) = dv.kind.shape();
        let mut terms = BTreeMap::new();
        let mut k = dv.offset;
        match dv.kind {
            VarKind::Symmetric(n) => {
                for i in 0..n {
                    for j in i..n {
                        let mut m = Matrix::zeros(n, n);
                        m[(i, j)] = 1.0;
                        m[(j, i)] = 1.0;
                        terms.insert(k, m);
                        k += 1;
                    }
                }
            }
            VarKind::DiagonalPositive(n) => {
                for i in 0..n {
                    let mut m = Matrix::zeros(n, n);
                    m[(i, i)] = 1.0;
                    terms.insert(k, m);
                    k += 1;
                }
            }
            VarKind::Rectangular(rows, cols) => {
                for i in 0..rows {
                    for j in 0..cols {
                        let mut m = Matrix::zeros(rows, cols);
                        m[(i, j)] = 1.0;
                        terms.insert(k, m);
                        k += 1;
                    }
                }
            }
            VarKind::Scalar => {
                terms.insert(k, Matrix::identity(1));
            }
        }
        AffineExpr::from_terms(r, c, terms)
    }

    /// Adds `expr ⪯ 0`.
    pub fn add_nsd(&mut self, name: &str, expr: AffineExpr) {
        assert!(expr.rows() == expr.cols(), "block {name} is not square");
        self.blocks.push(Block { name: name.to_string(), expr });
    }

    /// Adds `expr ⪰ 0`.
    pub fn add_psd(&mut self, name: &str, expr: AffineExpr) {
        self.add_nsd(name, expr.neg());
    }

    /// Fixes `trace(X) = value` for a square variable.
    pub fn normalize_trace(&mut self, v: Var, value: f64) {
        let dv = &self.vars[v.0];
        let coeffs = match dv.kind {
            VarKind::Symmetric(n) => {
                let mut out = Vec::with_capacity(n);
                let mut k = dv.offset;
                for i in 0..n {
                    out.push((k, 1.0));
                    k += n - i;
                }
                out
            }
            VarKind::DiagonalPositive(n) => (0..n).map(|i| (dv.offset + i, 1.0)).collect(),
            VarKind::Scalar => vec![(dv.offset, 1.0)],
            VarKind::Rectangular(..) => panic!("trace of a rectangular variable"),
        };
        self.equalities.push(Equality { coeffs, rhs: value });
    }

    /// Writes matrix values into a flat vector.
    pub fn pack(&self, values: &[(Var, &Matrix)]) -> Result<Vec<f64>, LmiError> {
        let mut x = vec![0.0; self.nflat];
        let mut seen = vec![false; self.vars.len()];
        for (v, m) in values {
            self.write(&mut x, *v, m)?;
            seen[v.0] = true;
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(LmiError::MissingVariable(self.vars[i].name.clone()));
        }
        Ok(x)
    }

    pub(crate) fn write(&self, x: &mut [f64], v: Var, m: &Matrix) -> Result<(), LmiError> {
        let dv = &self.vars[v.0];
        if m.shape() != dv.kind.shape() {
            return Err(LmiError::ShapeMismatch {
                var: dv.name.clone(),
                expected: dv.kind.shape(),
                found: m.shape(),
            });
        }
        let mut k = dv.offset;
        match dv.kind {
            VarKind::Symmetric(n) => {
                for i in 0..n {
                    for j in i..n {
                        x[k] = 0.5 * (m[(i, j)] + m[(j, i)]);
                        k += 1;
                    }
                }
            }
            VarKind::DiagonalPositive(n) => {
                for i in 0..n {
                    x[k + i] = m[(i, i)];
                }
            }
            VarKind::Rectangular(..) | VarKind::Scalar => {
                x[k..k + dv.kind.len()].copy_from_slice(m.as_slice());
            }
        }
        Ok(())
    }

    /// Reads a variable back out of a flat vector.
    pub fn value(&self, x: &[f64], v: Var) -> Matrix {
        let dv = &self.vars[v.0];
        let (r, c) = dv.kind.shape();
        let mut k = dv.offset;
        match dv.kind {
            VarKind::Symmetric(n) => {
                let mut m = Matrix::zeros(n, n);
                for i in 0..n {
                    for j in i..n {
                        m[(i, j)] = x[k];
                        m[(j, i)] = x[k];
                        k += 1;
                    }
                }
                m
            }
            VarKind::DiagonalPositive(n) => Matrix::from_diag(&x[k..k + n]),
            VarKind::Rectangular(..) | VarKind::Scalar => {
                Matrix::from_row_major(r, c, x[k..k + r * c].to_vec()).unwrap_or_else(|_| Matrix::zeros(r, c))
            }
        }
    }

    /// Natural starting point: `I` for floored square variables, zero otherwise.
    pub(crate) fn initial_point(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.nflat];
        for (i, dv) in self.vars.iter().enumerate() {
            if dv.floor.is_some() {
                let n = dv.kind.shape().0;
                let _ = self.write(&mut x, Var(i), &Matrix::identity(n));
            }
        }
        x
    }

    /// Evaluates every block at `x`.
    pub fn evaluate(&self, x: &[f64]) -> Vec<Matrix> {
        self.blocks.iter().map(|b| b.expr.eval(x)).collect()
    }

    /// Largest equality residual at `x`.
    pub fn equality_residual(&self, x: &[f64]) -> f64 {
        self.equalities
            .iter()
            .map(|e| {
                let s: f64 = e.coeffs.iter().map(|(k, a)| a * x[*k]).sum();
                crate::math::abs(s - e.rhs)
            })
            .fold(0.0, f64::max)
    }
}

/// Worst signed margin `min_j −λ_max(F_j(x))` over all blocks, computed
/// with the symmetric eigensolver (independent of the solver's Cholesky path).
pub fn verify_assignment(lmi: &AffineLmi, x: &[f64]) -> Result<f64, LmiError> {
    if x.len() != lmi.nflat {
        return Err(LmiError::ShapeMismatch {
            var: "assignment".to_string(),
            expected: (lmi.nflat, 1),
            found: (x.len(), 1),
        });
    }
    let mut worst = f64::INFINITY;
    for b in &lmi.blocks {
        let m = b.expr.eval(x);
        let l = max_eig(&m).map_err(LmiError::Linalg)?;
        worst = worst.min(-l);
    }
    Ok(worst)
}

/// Per-block margins, in block order.
pub fn block_margins(lmi: &AffineLmi, x: &[f64]) -> Result<Vec<(String, f64)>, LmiError> {
    lmi.blocks
        .iter()
        .map(|b| Ok((b.name.clone(), -max_eig(&b.expr.eval(x)).map_err(LmiError::Linalg)?)))
        .collect()
}
