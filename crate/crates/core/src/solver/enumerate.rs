//! Exhaustive active-set enumeration, used as a test oracle.

use nalgebra::{DMatrix, DVector};

use super::{LeastNormProblem, LeastNormSolution, Sense, SolveStatus, TOL_DUAL, TOL_FEAS, TOL_KKT};
use crate::{Error, Result};

/// 2^12 = 4096 subsets.
pub const MAX_ENUMERATED_INEQUALITIES: usize = 12;

const SVD_EPS: f64 = 1e-12;

/// Tries every subset of inequality rows as the active set (equalities are
/// always active), keeps the KKT points and returns the one of least norm.
///
/// Each subset is solved with the SVD pseudo-inverse, so dependent rows do
/// not need special handling.
pub fn solve_enumerate(problem: &LeastNormProblem) -> Result<LeastNormSolution> {
    let equalities: Vec<usize> = (0..problem.num_rows())
        .filter(|&i| problem.sense(i) == Sense::Eq)
        .collect();
    let inequalities: Vec<usize> = (0..problem.num_rows())
        .filter(|&i| problem.sense(i) == Sense::Geq)
        .collect();
    if inequalities.len() > MAX_ENUMERATED_INEQUALITIES {
        return Err(Error::InvalidArgument(format!(
            "enumeration supports at most {MAX_ENUMERATED_INEQUALITIES} inequalities, got {}",
            inequalities.len()
        )));
    }

    let scale = problem.rhs_scale();
    let mut best: Option<LeastNormSolution> = None;
    let subsets = 1usize << inequalities.len();
    for mask in 0..subsets {
        let mut working = equalities.clone();
        working.extend(
            inequalities
                .iter()
                .enumerate()
                .filter(|(bit, _)| mask & (1 << bit) != 0)
                .map(|(_, &i)| i),
        );
        working.sort_unstable();
        let Some((v, duals)) = pinv_kkt(problem, &working, scale) else {
            continue;
        };
        let slacks = problem.slacks(&v);
        let feasible = slacks.iter().enumerate().all(|(i, &s)| match problem.sense(i) {
            Sense::Eq => s.abs() <= TOL_FEAS * scale,
            Sense::Geq => s >= -TOL_FEAS * scale,
        });
        let dual_ok = working
            .iter()
            .all(|&i| problem.sense(i) == Sense::Eq || duals[i] >= -TOL_DUAL);
        if !(feasible && dual_ok) {
            continue;
        }
        let candidate = LeastNormSolution {
            v,
            duals,
            active: working,
            status: SolveStatus::Optimal,
            iterations: mask + 1,
        };
        if best
            .as_ref()
            .is_none_or(|b| candidate.objective() < b.objective())
        {
            best = Some(candidate);
        }
    }
    Ok(best.unwrap_or_else(|| LeastNormSolution::failed(problem, SolveStatus::Infeasible, subsets)))
}

/// Least-norm solution of `A_W v = b_W` and least-squares multipliers of
/// `A_W^T lambda = 2 v`. `None` if the subsystem is inconsistent.
fn pinv_kkt(
    problem: &LeastNormProblem,
    working: &[usize],
    scale: f64,
) -> Option<(DVector<f64>, Vec<f64>)> {
    let mut duals = vec![0.0; problem.num_rows()];
    if working.is_empty() {
        return Some((DVector::zeros(problem.dim()), duals));
    }
    let a = DMatrix::from_fn(working.len(), problem.dim(), |k, d| problem.row(working[k])[d]);
    let b = DVector::from_iterator(working.len(), working.iter().map(|&i| problem.rhs(i)));
    let v = refined_solve(&a, &b)?;
    if (&a * &v - &b).amax() > TOL_FEAS * scale {
        return None;
    }
    let at = a.transpose();
    let lambda = refined_solve(&at, &(&v * 2.0))?;
    if (&at * &lambda - &v * 2.0).norm() > TOL_KKT * (&v * 2.0).norm().max(1.0) {
        return None;
    }
    for (k, &i) in working.iter().enumerate() {
        duals[i] = lambda[k];
    }
    Some((v, duals))
}

/// Pseudo-inverse solve followed by two steps of iterative refinement; the
/// plain SVD solve can leave residuals near `1e-9` on wide systems.
fn refined_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    let mut x = svd.solve(b, SVD_EPS).ok()?;
    for _ in 0..2 {
        x += svd.solve(&(b - a * &x), SVD_EPS).ok()?;
    }
    Some(x)
}
