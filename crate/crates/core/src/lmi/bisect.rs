use super::{FeasResult, LmiError};

/// Result of a rate bisection.
#[derive(Clone, Debug)]
pub enum BisectOutcome {
    /// Largest certified rate and the solve that certified it.
    Rate { rate: f64, result: FeasResult, solves: usize },
    /// Even the lower end of the bracket is infeasible.
    LoInfeasible { best_margin: f64 },
}

impl BisectOutcome {
    pub fn rate(&self) -> Option<f64> {
        match self {
            BisectOutcome::Rate { rate, .. } => Some(*rate),
            BisectOutcome::LoInfeasible { .. } => None,
        }
    }
}

/// Largest rate in `[lo, hi]` for which `solve(rate)` is feasible, to `tol`.
///
/// Feasibility must be nonincreasing in the rate. After bisection the point
/// `rate + 2·tol` (when inside the bracket) is re-solved; finding it feasible
/// is reported as [`LmiError::NonMonotone`].
pub fn bisect_rate<F>(mut solve: F, lo: f64, hi: f64, tol: f64) -> Result<BisectOutcome, LmiError>
where
    F: FnMut(f64) -> Result<FeasResult, LmiError>,
{
    assert!(lo <= hi && tol > 0.0, "invalid bisection bracket");
    let mut solves = 0;
    let r_lo = solve(lo)?;
    solves += 1;
    if !r_lo.feasible() {
        return Ok(BisectOutcome::LoInfeasible { best_margin: r_lo.worst_margin });
    }
    let r_hi = solve(hi)?;
    solves += 1;
    if r_hi.feasible() {
        return Ok(BisectOutcome::Rate { rate: hi, result: r_hi, solves });
    }
    let (mut a, mut b) = (lo, hi);
    let mut best = r_lo;
    while b - a > tol {
        let m = 0.5 * (a + b);
        let r = solve(m)?;
        solves += 1;
        if r.feasible() {
            a = m;
            best = r;
        } else {
            b = m;
        }
    }
    let probe = a + 2.0 * tol;
    if probe < hi {
        let r = solve(probe)?;
        solves += 1;
        if r.feasible() {
            return Err(LmiError::NonMonotone { feasible: probe, infeasible: b });
        }
    }
    Ok(BisectOutcome::Rate { rate: a, result: best, solves })
}
