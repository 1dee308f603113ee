//! Numerical backends.
//!
//! * [`solve_active_set`]: exact dual active-set method for least-norm
//!   programs `min |v|^2 s.t. A_eq v = b_eq, A_in v >= b_in`.
//! * [`solve_enumerate`]: brute-force oracle over all active subsets, built
//!   on SVD pseudo-inverses so it shares no code path with the active-set
//!   solver.
//! * [`solve_multicast_sdp`]: log-barrier interior point for the multicast
//!   power bound `min tr(Q) s.t. h_j Q h_j^H >= c_j, Q >= 0`.
//!
//! Multipliers follow the `|v|^2` scaling: stationarity reads
//! `2 v = sum_i lambda_i a_i`.

mod active_set;
mod enumerate;
mod sdp;

pub use active_set::solve_active_set;
pub use enumerate::{solve_enumerate, MAX_ENUMERATED_INEQUALITIES};
pub use sdp::{solve_multicast_sdp, SdpProblem, SdpSolution};

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Primal feasibility tolerance, relative to `max(1, max |b_i|)`.
pub const TOL_FEAS: f64 = 1e-9;
/// Lower bound accepted for inequality multipliers.
pub const TOL_DUAL: f64 = 1e-9;
/// Stationarity residual bound.
pub const TOL_KKT: f64 = 1e-8;
/// Complementary slackness bound per inequality row.
pub const TOL_CS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Eq,
    /// `a . v >= b`
    Geq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

/// `min |v|^2` subject to linear rows, each either `=` or `>=`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastNormProblem {
    dim: usize,
    rows: Vec<DVector<f64>>,
    rhs: Vec<f64>,
    senses: Vec<Sense>,
}

impl LeastNormProblem {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            rows: Vec::new(),
            rhs: Vec::new(),
            senses: Vec::new(),
        }
    }

    pub fn push(&mut self, coeffs: &[f64], sense: Sense, rhs: f64) -> Result<()> {
        if coeffs.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "row of length {} in a {}-dimensional problem",
                coeffs.len(),
                self.dim
            )));
        }
        if !rhs.is_finite() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite constraint data".into()));
        }
        self.rows.push(DVector::from_column_slice(coeffs));
        self.rhs.push(rhs);
        self.senses.push(sense);
        Ok(())
    }

    pub fn push_eq(&mut self, coeffs: &[f64], rhs: f64) -> Result<()> {
        self.push(coeffs, Sense::Eq, rhs)
    }

    pub fn push_geq(&mut self, coeffs: &[f64], rhs: f64) -> Result<()> {
        self.push(coeffs, Sense::Geq, rhs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &DVector<f64> {
        &self.rows[i]
    }

    pub fn rhs(&self, i: usize) -> f64 {
        self.rhs[i]
    }

    pub fn sense(&self, i: usize) -> Sense {
        self.senses[i]
    }

    pub fn inequality_count(&self) -> usize {
        self.senses.iter().filter(|s| **s == Sense::Geq).count()
    }

    /// `a_i . v - b_i` for every row.
    pub fn slacks(&self, v: &DVector<f64>) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(a, b)| a.dot(v) - b)
            .collect()
    }

    /// Scale against which feasibility is measured.
    pub fn rhs_scale(&self) -> f64 {
        self.rhs.iter().fold(1.0f64, |m, b| m.max(b.abs()))
    }

    /// Rows as a dense matrix (one constraint per row).
    pub fn matrix(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.rows.len(), self.dim);
        for (i, row) in self.rows.iter().enumerate() {
            a.set_row(i, &row.transpose());
        }
        a
    }

    /// Evaluates the KKT conditions at `(v, duals)`.
    pub fn kkt_report(&self, v: &DVector<f64>, duals: &[f64]) -> KktReport {
        let slacks = self.slacks(v);
        let scale = self.rhs_scale();
        let mut report = KktReport::default();
        let mut gradient = v * 2.0;
        for (i, (&s, &lambda)) in slacks.iter().zip(duals).enumerate() {
            gradient -= &self.rows[i] * lambda;
            match self.senses[i] {
                Sense::Eq => {
                    report.primal_violation = report.primal_violation.max(s.abs() / scale);
                }
                Sense::Geq => {
                    report.primal_violation = report.primal_violation.max((-s).max(0.0) / scale);
                    report.dual_violation = report.dual_violation.max((-lambda).max(0.0));
                    report.complementarity = report.complementarity.max((lambda * s).abs());
                }
            }
        }
        report.stationarity = gradient.norm();
        report.magnitude = duals
            .iter()
            .zip(&self.rows)
            .fold((v * 2.0).norm().max(1.0), |m, (l, a)| m.max(l.abs() * a.norm()));
        report
    }
}

/// Worst-case KKT residuals of a candidate solution.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KktReport {
    /// Largest constraint violation, scaled by [`LeastNormProblem::rhs_scale`].
    pub primal_violation: f64,
    /// Largest negative part of an inequality multiplier.
    pub dual_violation: f64,
    /// Largest `|lambda_i * slack_i|` over inequality rows.
    pub complementarity: f64,
    /// `|2 v - sum_i lambda_i a_i|`.
    pub stationarity: f64,
    /// `max(1, |2 v|, max_i |lambda_i| |a_i|)`; stationarity and
    /// complementarity are certified relative to it.
    pub magnitude: f64,
}

impl KktReport {
    pub fn certifies(&self) -> bool {
        self.primal_violation <= TOL_FEAS
            && self.dual_violation <= TOL_DUAL
            && self.complementarity <= TOL_CS * self.magnitude
            && self.stationarity <= TOL_KKT * self.magnitude
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeastNormSolution {
    pub v: DVector<f64>,
    /// One multiplier per problem row, zero for rows outside the active set.
    pub duals: Vec<f64>,
    /// Row indices treated as active (equalities included), ascending.
    pub active: Vec<usize>,
    pub status: SolveStatus,
    pub iterations: usize,
}

impl LeastNormSolution {
    pub(crate) fn failed(problem: &LeastNormProblem, status: SolveStatus, iterations: usize) -> Self {
        Self {
            v: DVector::zeros(problem.dim()),
            duals: vec![0.0; problem.num_rows()],
            active: Vec::new(),
            status,
            iterations,
        }
    }

    pub fn objective(&self) -> f64 {
        self.v.norm_squared()
    }
}

/// Solves the KKT system of `problem` with every row in `working` held
/// active: `v = A_W^T y`, `A_W A_W^T y = b_W`, `lambda = 2 y`.
///
/// Uses the thin QR factorization `A_W^T = Q R`: `v = Q R^-T b_W` with one
/// refinement step, then `y = R^-1 Q^T v`. Returns `None`
/// if the working rows are numerically dependent.
pub(crate) fn solve_working_set(
    problem: &LeastNormProblem,
    working: &[usize],
) -> Option<(DVector<f64>, Vec<f64>)> {
    let q = working.len();
    let mut duals = vec![0.0; problem.num_rows()];
    if q == 0 {
        return Some((DVector::zeros(problem.dim()), duals));
    }
    if q > problem.dim() {
        return None;
    }
    let at = DMatrix::from_fn(problem.dim(), q, |d, k| problem.row(working[k])[d]);
    let b = DVector::from_iterator(q, working.iter().map(|&i| problem.rhs(i)));
    let qr = at.clone().qr();
    let (qm, r) = (qr.q(), qr.r());
    let rmax = r.diagonal().amax();
    if r.diagonal().iter().any(|d| d.abs() <= 1e-13 * rmax) {
        return None;
    }
    let rt = r.transpose();
    let mut v = DVector::zeros(problem.dim());
    for _ in 0..2 {
        let residual = &b - at.transpose() * &v;
        v += &qm * rt.solve_lower_triangular(&residual)?;
    }
    let y = r.solve_upper_triangular(&(qm.transpose() * &v))?;
    for (k, &i) in working.iter().enumerate() {
        duals[i] = 2.0 * y[k];
    }
    y.iter().all(|x| x.is_finite()).then_some((v, duals))
}

/// Cholesky solve with one regularized retry.
pub(crate) fn cholesky_solve(gram: DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let n = gram.nrows();
    if let Some(chol) = gram.clone().cholesky() {
        let y = chol.solve(b);
        if y.iter().all(|x| x.is_finite()) {
            return Some(y);
        }
    }
    let shifted = gram + DMatrix::identity(n, n) * 1e-12;
    let y = shifted.cholesky()?.solve(b);
    y.iter().all(|x| x.is_finite()).then_some(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_checks_dimension() {
        let mut p = LeastNormProblem::new(3);
        assert!(p.push_geq(&[1.0, 2.0], 1.0).is_err());
        assert!(p.push_geq(&[1.0, f64::NAN, 0.0], 1.0).is_err());
        p.push_eq(&[1.0, 0.0, 0.0], 2.0).unwrap();
        assert_eq!(p.num_rows(), 1);
        assert_eq!(p.inequality_count(), 0);
    }

    #[test]
    fn kkt_report_of_single_row_optimum() {
        let mut p = LeastNormProblem::new(2);
        p.push_geq(&[3.0, 4.0], 5.0).unwrap();
        let v = DVector::from_vec(vec![0.6, 0.8]);
        let report = p.kkt_report(&v, &[0.4]);
        assert!(report.certifies(), "{report:?}");
        let bad = p.kkt_report(&v, &[-0.4]);
        assert!(!bad.certifies());
    }
}
