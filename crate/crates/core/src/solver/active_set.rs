//! Dual active-set method (Goldfarb-Idnani) specialised to the identity
//! Hessian.
//!
//! The iterate always minimizes `|v|^2` over the current working set with
//! nonnegative inequality multipliers. Each outer step picks a violated row
//! (equalities first, then the most violated inequality by normalized slack)
//! and moves along the projection of its normal onto the null space of the
//! working normals. A working inequality whose multiplier reaches zero on
//! the way is dropped. The objective increases strictly between additions,
//! so no working set repeats.

use nalgebra::{DMatrix, DVector};

use super::{
    cholesky_solve, solve_working_set, LeastNormProblem, LeastNormSolution, Sense, SolveStatus,
};

/// A projected normal counts as dependent once it is below this fraction of
/// `|n| + sum_k |r_k| |n_k|`, the size of the cancellation that produced it.
const DEPENDENCE_TOL: f64 = 1e-10;
/// Slack below `-VIOLATION_TOL * scale * max(1, |a_i|)` marks a row violated.
const VIOLATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
struct WorkingRow {
    row: usize,
    /// The working normal is `sign * a_row` (equalities may enter flipped).
    sign: f64,
    multiplier: f64,
}

/// Least-norm solution with a full KKT certificate.
pub fn solve_active_set(problem: &LeastNormProblem) -> LeastNormSolution {
    let n_rows = problem.num_rows();
    let budget = 100 * n_rows.max(1);
    let scale = problem.rhs_scale();
    let norms: Vec<f64> = (0..n_rows).map(|i| problem.row(i).norm()).collect();

    let mut v = DVector::<f64>::zeros(problem.dim());
    let mut working: Vec<WorkingRow> = Vec::new();
    let mut iterations = 0;

    while let Some((p, sign)) = pick_violated(problem, &v, &working, &norms, scale) {
        let normal = problem.row(p) * sign;
        let target = problem.rhs(p) * sign;
        let mut entering = 0.0;

        loop {
            iterations += 1;
            if iterations > budget {
                return LeastNormSolution::failed(problem, SolveStatus::NumericalFailure, iterations);
            }
            let Some((r, z)) = project(problem, &working, &normal) else {
                return LeastNormSolution::failed(problem, SolveStatus::NumericalFailure, iterations);
            };

            // Largest step keeping working inequality multipliers >= 0.
            let mut partial: Option<(f64, usize)> = None;
            for (k, w) in working.iter().enumerate() {
                if problem.sense(w.row) == Sense::Geq && r[k] > 0.0 {
                    let t = w.multiplier / r[k];
                    if partial.is_none_or(|(best, _)| t < best) {
                        partial = Some((t, k));
                    }
                }
            }

            let cancelled = working
                .iter()
                .zip(r.iter())
                .fold(normal.norm(), |acc, (w, rk)| acc + rk.abs() * norms[w.row]);
            if z.norm() <= DEPENDENCE_TOL * cancelled {
                // Normal lies in the span of the working set: only the
                // multipliers move.
                let Some((t, k)) = partial else {
                    return LeastNormSolution::failed(problem, SolveStatus::Infeasible, iterations);
                };
                shift_multipliers(&mut working, &r, t);
                entering += t;
                working.remove(k);
                continue;
            }

            let full = (target - normal.dot(&v)) / z.dot(&normal);
            match partial {
                Some((t, k)) if t < full => {
                    v += &z * t;
                    shift_multipliers(&mut working, &r, t);
                    entering += t;
                    working.remove(k);
                }
                _ => {
                    v += &z * full;
                    shift_multipliers(&mut working, &r, full);
                    entering += full;
                    working.push(WorkingRow {
                        row: p,
                        sign,
                        multiplier: entering,
                    });
                    break;
                }
            }
        }
    }

    certify(problem, v, &working, iterations)
}

/// Next row to enter the working set, with the sign of its working normal.
fn pick_violated(
    problem: &LeastNormProblem,
    v: &DVector<f64>,
    working: &[WorkingRow],
    norms: &[f64],
    scale: f64,
) -> Option<(usize, f64)> {
    let in_working = |i: usize| working.iter().any(|w| w.row == i);
    let slacks = problem.slacks(v);
    let threshold = |i: usize| VIOLATION_TOL * scale * norms[i].max(1.0);

    for (i, &s) in slacks.iter().enumerate() {
        if problem.sense(i) == Sense::Eq && !in_working(i) && s.abs() > threshold(i) {
            return Some((i, if s > 0.0 { -1.0 } else { 1.0 }));
        }
    }

    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in slacks.iter().enumerate() {
        if problem.sense(i) == Sense::Geq && !in_working(i) && s < -threshold(i) {
            let normalized = s / norms[i];
            if best.is_none_or(|(_, b)| normalized < b) {
                best = Some((i, normalized));
            }
        }
    }
    best.map(|(i, _)| (i, 1.0))
}

/// Splits `normal` into working-set coefficients `r` and the null-space
/// component `z = normal - N r`.
fn project(
    problem: &LeastNormProblem,
    working: &[WorkingRow],
    normal: &DVector<f64>,
) -> Option<(DVector<f64>, DVector<f64>)> {
    let q = working.len();
    if q == 0 {
        return Some((DVector::zeros(0), normal.clone()));
    }
    let basis = DMatrix::from_fn(problem.dim(), q, |d, k| {
        working[k].sign * problem.row(working[k].row)[d]
    });
    let gram = basis.transpose() * &basis;
    let r = cholesky_solve(gram, &(basis.transpose() * normal))?;
    let z = normal - &basis * &r;
    Some((r, z))
}

fn shift_multipliers(working: &mut [WorkingRow], r: &DVector<f64>, t: f64) {
    for (k, w) in working.iter_mut().enumerate() {
        w.multiplier -= t * r[k];
    }
}

/// Re-solves the final working set exactly and checks the KKT conditions,
/// falling back to the iterate itself if the polished point does not certify.
fn certify(
    problem: &LeastNormProblem,
    v: DVector<f64>,
    working: &[WorkingRow],
    iterations: usize,
) -> LeastNormSolution {
    let mut active: Vec<usize> = working.iter().map(|w| w.row).collect();
    active.sort_unstable();

    let mut candidates = Vec::with_capacity(2);
    if let Some(polished) = solve_working_set(problem, &active) {
        candidates.push(polished);
    }
    let mut duals = vec![0.0; problem.num_rows()];
    for w in working {
        duals[w.row] = 2.0 * w.sign * w.multiplier;
    }
    candidates.push((v, duals));

    for (v, duals) in candidates {
        if problem.kkt_report(&v, &duals).certifies() {
            return LeastNormSolution {
                v,
                duals,
                active,
                status: SolveStatus::Optimal,
                iterations,
            };
        }
    }
    LeastNormSolution::failed(problem, SolveStatus::NumericalFailure, iterations)
}
