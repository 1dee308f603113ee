//! Log-barrier interior point for the multicast power bound
//!
//! ```text
//! min tr(Q)  s.t.  tr(A_j Q) >= c_j,  Q >= 0 (Hermitian PSD)
//! ```
//!
//! with `A_j = h_j^H h_j`. `Q` is parametrized by `n^2` real coordinates over
//! the Hermitian basis `{E_ii, E_ab + E_ba, i(E_ab - E_ba)}` and each barrier
//! subproblem `t tr(Q) - log det Q - sum_j log(tr(A_j Q) - c_j)` is centred by
//! damped Newton steps.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::SolveStatus;
use crate::chanmodel::ChannelMatrix;
use crate::{Error, Result};

const GAP_TOL: f64 = 1e-7;
const BARRIER_FACTOR: f64 = 10.0;
const MAX_OUTER: usize = 60;
const MAX_NEWTON: usize = 100;
/// Centring stops once half the squared Newton decrement is below this.
const NEWTON_TOL: f64 = 1e-12;
/// Newton decrement (not squared) below which full steps are taken.
/// Near the boundary `log det Q` is only accurate to about `cond(Q) eps`,
/// too coarse for a line search on the last few steps.
const PURE_NEWTON: f64 = 0.25;
/// Newton decrement below which a stalled line search still counts as centred.
const STALL_DECREMENT: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SdpProblem {
    n: usize,
    constraint_mats: Vec<DMatrix<Complex64>>,
    rhs: Vec<f64>,
}

impl SdpProblem {
    pub fn new(constraint_mats: Vec<DMatrix<Complex64>>, rhs: Vec<f64>) -> Result<Self> {
        let n = constraint_mats.first().map_or(0, |a| a.nrows());
        if n == 0 || constraint_mats.len() != rhs.len() {
            return Err(Error::DimensionMismatch(
                "need one nonempty constraint matrix per right-hand side".into(),
            ));
        }
        for a in &constraint_mats {
            if a.nrows() != n || a.ncols() != n {
                return Err(Error::DimensionMismatch(format!("constraint matrices must be {n}x{n}")));
            }
            if (a - a.adjoint()).camax() > 1e-12 {
                return Err(Error::InvalidArgument("constraint matrix is not Hermitian".into()));
            }
        }
        if rhs.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(Error::InvalidArgument("right-hand sides must be positive".into()));
        }
        if constraint_mats.iter().all(|a| a.camax() == 0.0) {
            return Err(Error::InvalidArgument("all constraint matrices are zero".into()));
        }
        Ok(Self {
            n,
            constraint_mats,
            rhs,
        })
    }

    /// `h_j Q h_j^H >= rhs_j` for every user `j` of `channel`.
    pub fn multicast(channel: &ChannelMatrix, rhs: &[f64]) -> Result<Self> {
        if rhs.len() != channel.users() {
            return Err(Error::DimensionMismatch(format!(
                "{} targets for {} users",
                rhs.len(),
                channel.users()
            )));
        }
        let mats = (0..channel.users())
            .map(|j| {
                let h = channel.entries().row(j);
                h.adjoint() * h
            })
            .collect();
        Self::new(mats, rhs.to_vec())
    }

    pub fn order(&self) -> usize {
        self.n
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    /// `tr(Q)` in the complex domain.
    pub trace: f64,
    pub q: DMatrix<Complex64>,
    pub status: SolveStatus,
    /// Dual objective at the last central point (a certified lower bound).
    pub lower_bound: Option<f64>,
    /// Trace of every accepted (strictly feasible) iterate.
    pub history: Vec<f64>,
    pub newton_steps: usize,
}

struct Barrier<'a> {
    problem: &'a SdpProblem,
    basis: Vec<DMatrix<Complex64>>,
    /// `tr(A_j B_k)`, real because both are Hermitian.
    coupling: DMatrix<f64>,
    basis_trace: DVector<f64>,
}

impl<'a> Barrier<'a> {
    fn new(problem: &'a SdpProblem) -> Self {
        let n = problem.n;
        let mut basis = Vec::with_capacity(n * n);
        for a in 0..n {
            let mut b = DMatrix::zeros(n, n);
            b[(a, a)] = Complex64::new(1.0, 0.0);
            basis.push(b);
        }
        for a in 0..n {
            for c in a + 1..n {
                let mut sym = DMatrix::zeros(n, n);
                sym[(a, c)] = Complex64::new(1.0, 0.0);
                sym[(c, a)] = Complex64::new(1.0, 0.0);
                basis.push(sym);
                let mut skew = DMatrix::zeros(n, n);
                skew[(a, c)] = Complex64::new(0.0, 1.0);
                skew[(c, a)] = Complex64::new(0.0, -1.0);
                basis.push(skew);
            }
        }
        let coupling = DMatrix::from_fn(problem.rhs.len(), basis.len(), |j, k| {
            (&problem.constraint_mats[j] * &basis[k]).trace().re
        });
        let basis_trace = DVector::from_iterator(basis.len(), basis.iter().map(|b| b.trace().re));
        Self {
            problem,
            basis,
            coupling,
            basis_trace,
        }
    }

    fn assemble(&self, params: &DVector<f64>) -> DMatrix<Complex64> {
        let n = self.problem.n;
        let mut q = DMatrix::zeros(n, n);
        for (b, &p) in self.basis.iter().zip(params.iter()) {
            q += b * Complex64::new(p, 0.0);
        }
        q
    }

    fn constraint_slacks(&self, params: &DVector<f64>) -> DVector<f64> {
        let values = &self.coupling * params;
        DVector::from_iterator(
            values.len(),
            values.iter().zip(&self.problem.rhs).map(|(v, c)| v - c),
        )
    }

    /// `-log det Q - sum_j log g_j`, or `None` outside the interior.
    fn log_barrier(&self, params: &DVector<f64>) -> Option<f64> {
        let slacks = self.constraint_slacks(params);
        if slacks.iter().any(|&g| g <= 0.0) {
            return None;
        }
        let chol = self.assemble(params).cholesky()?;
        let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.re.ln()).sum::<f64>();
        Some(-log_det - slacks.iter().map(|g| g.ln()).sum::<f64>())
    }

    /// Change of the barrier objective along `delta`. The linear term is
    /// taken from `delta` directly: at large `t` the absolute objective is too
    /// big for its differences to resolve a Newton step.
    fn change(&self, t: f64, params: &DVector<f64>, base: f64, delta: &DVector<f64>) -> Option<f64> {
        let trial = params + delta;
        Some(t * self.basis_trace.dot(delta) + self.log_barrier(&trial)? - base)
    }

    /// Coordinates of a Hermitian matrix in the basis.
    fn coefficients(&self, m: &DMatrix<Complex64>) -> DVector<f64> {
        let n = self.problem.n;
        let mut out = DVector::zeros(self.basis.len());
        let mut k = n;
        for a in 0..n {
            out[a] = m[(a, a)].re;
            for c in a + 1..n {
                out[k] = m[(a, c)].re;
                out[k + 1] = m[(a, c)].im;
                k += 2;
            }
        }
        out
    }

    /// Newton step in parameter coordinates and the Newton decrement.
    ///
    /// The step is computed for `dQ = L W L^H` with `Q = L L^H`. In `W` the
    /// Hessian of `-log det` is the basis Gram matrix, so the system stays
    /// well conditioned as `Q` approaches the boundary.
    fn newton_direction(&self, t: f64, params: &DVector<f64>) -> Option<(DVector<f64>, f64)> {
        let dim = self.basis.len();
        let q = self.assemble(params);
        let l = q.cholesky()?.l();
        let lh = l.adjoint();
        let slacks = self.constraint_slacks(params);
        let gram_l = &lh * &l;
        let scaled_mats: Vec<DMatrix<Complex64>> =
            self.problem.constraint_mats.iter().map(|a| &lh * a * &l).collect();

        let mut grad = DVector::zeros(dim);
        let mut hess = DMatrix::<f64>::zeros(dim, dim);
        let mut coupling = DMatrix::<f64>::zeros(slacks.len(), dim);
        for (k, b) in self.basis.iter().enumerate() {
            grad[k] = t * (&gram_l * b).trace().re - b.trace().re;
            hess[(k, k)] = (b * b).trace().re;
            for (j, a) in scaled_mats.iter().enumerate() {
                coupling[(j, k)] = (a * b).trace().re;
            }
        }
        for (j, &g) in slacks.iter().enumerate() {
            let row = coupling.row(j);
            grad -= row.transpose() / g;
            hess += row.transpose() * row / (g * g);
        }
        let w = match hess.clone().cholesky() {
            Some(chol) => chol.solve(&(-&grad)),
            None => (hess + DMatrix::identity(dim, dim) * 1e-12)
                .cholesky()?
                .solve(&(-&grad)),
        };
        let decrement = -grad.dot(&w);
        let dq = &l * self.assemble(&w) * &lh;
        Some((self.coefficients(&dq), decrement))
    }

    /// Dual objective of the central-path multipliers `1/(t g_j)`, rescaled so
    /// that `sum_j lambda_j A_j <= I` holds exactly.
    fn dual_bound(&self, t: f64, params: &DVector<f64>) -> Option<f64> {
        let slacks = self.constraint_slacks(params);
        let n = self.problem.n;
        let mut weighted = DMatrix::<Complex64>::zeros(n, n);
        let mut bound = 0.0;
        for (j, &g) in slacks.iter().enumerate() {
            let lambda = 1.0 / (t * g);
            weighted += &self.problem.constraint_mats[j] * Complex64::new(lambda, 0.0);
            bound += lambda * self.problem.rhs[j];
        }
        let top = weighted.symmetric_eigenvalues().max();
        (top > 0.0).then(|| bound / top.max(1.0))
    }
}

/// Minimizes `tr(Q)` over the multicast feasible set.
pub fn solve_multicast_sdp(problem: &SdpProblem) -> SdpSolution {
    let n = problem.n;
    let barrier = Barrier::new(problem);
    let failed = |status, history: Vec<f64>, newton_steps| SdpSolution {
        trace: f64::NAN,
        q: DMatrix::zeros(n, n),
        status,
        lower_bound: None,
        history,
        newton_steps,
    };

    // Q0 = c I with every constraint met at twice its right-hand side.
    let mut c0: f64 = 0.0;
    for (a, &rhs) in problem.constraint_mats.iter().zip(&problem.rhs) {
        let tr = a.trace().re;
        if tr <= 0.0 {
            return failed(SolveStatus::Infeasible, Vec::new(), 0);
        }
        c0 = c0.max(2.0 * rhs / tr);
    }
    let mut params = DVector::zeros(barrier.basis.len());
    for a in 0..n {
        params[a] = c0;
    }

    let degree = (n + problem.rhs.len()) as f64;
    let mut t = degree / (c0 * n as f64);
    let mut history = vec![barrier.basis_trace.dot(&params)];
    let mut newton_steps = 0;

    for _ in 0..MAX_OUTER {
        let mut centred = false;
        for _ in 0..MAX_NEWTON {
            let Some((step, decrement)) = barrier.newton_direction(t, &params) else {
                return failed(SolveStatus::NumericalFailure, history, newton_steps);
            };
            if decrement / 2.0 <= NEWTON_TOL {
                centred = true;
                break;
            }
            newton_steps += 1;
            // Inside the quadratic region of a self-concordant barrier the
            // full step stays interior and needs no line search.
            if decrement < PURE_NEWTON * PURE_NEWTON {
                let trial = &params + &step;
                if barrier.log_barrier(&trial).is_some() {
                    params = trial;
                    history.push(barrier.basis_trace.dot(&params));
                    continue;
                }
            }
            let Some(base) = barrier.log_barrier(&params) else {
                return failed(SolveStatus::NumericalFailure, history, newton_steps);
            };
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let delta = &step * alpha;
                if let Some(df) = barrier.change(t, &params, base, &delta) {
                    if df <= -0.25 * alpha * decrement {
                        params += delta;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                centred = decrement < STALL_DECREMENT;
                break;
            }
            history.push(barrier.basis_trace.dot(&params));
        }
        if !centred {
            return failed(SolveStatus::NumericalFailure, history, newton_steps);
        }
        let trace = barrier.basis_trace.dot(&params);
        if degree / t <= GAP_TOL * (1.0 + trace) {
            return SdpSolution {
                trace,
                q: barrier.assemble(&params),
                status: SolveStatus::Optimal,
                lower_bound: barrier.dual_bound(t, &params),
                history,
                newton_steps,
            };
        }
        t *= BARRIER_FACTOR;
    }
    failed(SolveStatus::NumericalFailure, history, newton_steps)
}
