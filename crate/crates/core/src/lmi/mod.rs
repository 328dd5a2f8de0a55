//! Affine matrix inequalities and their feasibility solver.

mod bisect;
mod expr;
mod problem;
mod solver;

pub use bisect::{bisect_rate, BisectOutcome};
pub use expr::AffineExpr;
pub use problem::{
    block_margins, verify_assignment, AffineLmi, Block, DecisionVar, Var, VarKind, DELTA_PD,
};
pub use solver::{solve_feasibility, FeasResult, SolveOptions, SolveStatus};

use alloc::string::String;

use crate::linalg::LinalgError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LmiError {
    #[error("variable {var}: expected shape {expected:?}, found {found:?}")]
    ShapeMismatch { var: String, expected: (usize, usize), found: (usize, usize) },
    #[error("no value given for variable {0}")]
    MissingVariable(String),
    #[error("equality constraints are inconsistent")]
    InconsistentEqualities,
    #[error("barrier iteration lost positive definiteness")]
    SolverBreakdown,
    #[error("feasibility is not monotone: rate {feasible} feasible above infeasible {infeasible}")]
    NonMonotone { feasible: f64, infeasible: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
