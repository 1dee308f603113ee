//! Per-slot constructive-interference precoding.
//!
//! The transmit vector `x in C^M` is handled in its real image
//! `v = [Re(x); Im(x)] in R^{2M}`. For a channel row `h = a + i b`:
//!
//! ```text
//! Re(h x) = [ a, -b] . v
//! Im(h x) = [ b,  a] . v
//! ```
//!
//! User `j` with unit-power symbol `d_j` contributes two rows (real axis
//! first, then imaginary axis) with threshold `sigma sqrt(zeta_j)` times the
//! symbol coordinate. Interior coordinates must be hit exactly; extreme
//! coordinates only need to be reached or exceeded outward, which is stored
//! as `s * row . v >= s * threshold` with `s` the coordinate sign.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::chanmodel::ChannelMatrix;
use crate::mqam::{Axis, ConstellationSpec};
use crate::solver::{
    solve_active_set, solve_working_set, KktReport, LeastNormProblem, Sense, SolveStatus, TOL_DUAL,
    TOL_FEAS,
};
use crate::{Error, Result};

/// One data symbol per user for a single symbol period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolSlot<'a> {
    spec: &'a ConstellationSpec,
    indices: &'a [usize],
}

impl<'a> SymbolSlot<'a> {
    pub fn new(spec: &'a ConstellationSpec, indices: &'a [usize]) -> Result<Self> {
        if let Some(&index) = indices.iter().find(|&&i| i >= spec.order()) {
            return Err(Error::PointIndexOutOfRange {
                index,
                order: spec.order(),
            });
        }
        Ok(Self { spec, indices })
    }

    pub fn spec(&self) -> &'a ConstellationSpec {
        self.spec
    }

    pub fn indices(&self) -> &'a [usize] {
        self.indices
    }

    pub fn users(&self) -> usize {
        self.indices.len()
    }

    pub fn symbol(&self, user: usize) -> Complex64 {
        self.spec.points()[self.indices[user]]
    }
}

/// Per-user SNR targets (linear) and the receiver noise standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrTargets {
    zeta: Vec<f64>,
    sigma: f64,
}

impl SnrTargets {
    pub fn new(zeta: Vec<f64>, sigma: f64) -> Result<Self> {
        if zeta.iter().any(|&z| !(z > 0.0 && z.is_finite())) {
            return Err(Error::InvalidArgument("SNR targets must be positive".into()));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { zeta, sigma })
    }

    /// The same target for `users` users.
    pub fn uniform(users: usize, zeta: f64, sigma: f64) -> Result<Self> {
        Self::new(vec![zeta; users], sigma)
    }

    pub fn zeta(&self) -> &[f64] {
        &self.zeta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `sigma sqrt(zeta_j)`, the amplitude at which user `j` sees a unit symbol.
    pub fn amplitude(&self, user: usize) -> f64 {
        self.sigma * self.zeta[user].sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.zeta.iter().map(|z| z * factor).collect(), self.sigma)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintRow {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
    pub user: usize,
    pub axis: Axis,
    /// -1 when the row was negated to put a `<=` constraint in `>=` form.
    pub orientation: f64,
}

/// The 2K real rows of one slot's program over `R^{2M}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    pub rows: Vec<ConstraintRow>,
    pub dim: usize,
}

impl ConstraintSet {
    pub fn to_problem(&self) -> LeastNormProblem {
        let mut problem = LeastNormProblem::new(self.dim);
        for row in &self.rows {
            problem
                .push(&row.coeffs, row.sense, row.rhs)
                .expect("constraint rows are validated on construction");
        }
        problem
    }

    /// KKT residuals of a precoding solution against these rows.
    pub fn kkt_report(&self, solution: &PrecodeSolution) -> KktReport {
        self.to_problem().kkt_report(&realify(&solution.x), &solution.duals)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecodeSolution {
    /// Transmit vector (amplitude units).
    pub x: Vec<Complex64>,
    /// `|x|^2`.
    pub power: f64,
    /// Multipliers aligned with the constraint rows, in the `|x|^2` scaling.
    pub duals: Vec<f64>,
    pub active: Vec<usize>,
    pub status: SolveStatus,
}

impl PrecodeSolution {
    fn from_real(v: &DVector<f64>, duals: Vec<f64>, active: Vec<usize>, status: SolveStatus) -> Self {
        let x = complexify(v);
        let power = x.iter().map(|c| c.norm_sqr()).sum();
        Self {
            x,
            power,
            duals,
            active,
            status,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// `[Re(x); Im(x)]`.
pub fn realify(x: &[Complex64]) -> DVector<f64> {
    let m = x.len();
    DVector::from_fn(2 * m, |i, _| if i < m { x[i].re } else { x[i - m].im })
}

/// Inverse of [`realify`].
pub fn complexify(v: &DVector<f64>) -> Vec<Complex64> {
    let m = v.len() / 2;
    (0..m).map(|i| Complex64::new(v[i], v[m + i])).collect()
}

/// Real rows `(Re(h_j x), Im(h_j x))` for user `j`.
fn realified_rows(channel: &ChannelMatrix, user: usize) -> (Vec<f64>, Vec<f64>) {
    let m = channel.antennas();
    let h = channel.entries().row(user);
    let mut re_row = vec![0.0; 2 * m];
    let mut im_row = vec![0.0; 2 * m];
    for (k, c) in h.iter().enumerate() {
        re_row[k] = c.re;
        re_row[m + k] = -c.im;
        im_row[k] = c.im;
        im_row[m + k] = c.re;
    }
    (re_row, im_row)
}

fn check_dims(channel: &ChannelMatrix, slot: &SymbolSlot, targets: &SnrTargets) -> Result<()> {
    let k = channel.users();
    if slot.users() != k || targets.zeta().len() != k {
        return Err(Error::DimensionMismatch(format!(
            "channel has {k} users, slot has {}, targets have {}",
            slot.users(),
            targets.zeta().len()
        )));
    }
    Ok(())
}

/// Builds the per-axis detection-region constraints of one slot.
pub fn build_constraints(
    channel: &ChannelMatrix,
    slot: &SymbolSlot,
    targets: &SnrTargets,
) -> Result<ConstraintSet> {
    check_dims(channel, slot, targets)?;
    let mut rows = Vec::with_capacity(2 * channel.users());
    for j in 0..channel.users() {
        let (re_class, im_class) = slot.spec().classify(slot.indices()[j])?;
        let d = slot.symbol(j);
        let amp = targets.amplitude(j);
        let (re_row, im_row) = realified_rows(channel, j);
        for (coeffs, class, coordinate) in [(re_row, re_class, d.re), (im_row, im_class, d.im)] {
            let rhs = amp * coordinate;
            let row = if class.is_extreme() {
                let s = f64::from(class.sign);
                ConstraintRow {
                    coeffs: coeffs.iter().map(|c| s * c).collect(),
                    sense: Sense::Geq,
                    rhs: s * rhs,
                    user: j,
                    axis: class.axis,
                    orientation: s,
                }
            } else {
                ConstraintRow {
                    coeffs,
                    sense: Sense::Eq,
                    rhs,
                    user: j,
                    axis: class.axis,
                    orientation: 1.0,
                }
            };
            rows.push(row);
        }
    }
    Ok(ConstraintSet {
        rows,
        dim: 2 * channel.antennas(),
    })
}

/// Minimum-power constructive-interference transmit vector for one slot.
pub fn precode_min_power(
    channel: &ChannelMatrix,
    slot: &SymbolSlot,
    targets: &SnrTargets,
) -> Result<PrecodeSolution> {
    let set = build_constraints(channel, slot, targets)?;
    let solution = solve_active_set(&set.to_problem());
    Ok(PrecodeSolution::from_real(
        &solution.v,
        solution.duals,
        solution.active,
        solution.status,
    ))
}

/// Symbol-level zero forcing: `x = H^H (H H^H)^{-1} b`, `b_j = sigma sqrt(zeta_j) d_j`.
///
/// This is the least-norm point with every constraint row held as an
/// equality, so it is solved by the same working-set routine as the
/// constructive-interference program. The reported multipliers are those
/// of the all-equality program, aligned with the constraint rows.
pub fn precode_zf_symbol(
    channel: &ChannelMatrix,
    slot: &SymbolSlot,
    targets: &SnrTargets,
) -> Result<PrecodeSolution> {
    check_dims(channel, slot, targets)?;
    let k = channel.users();
    if k > channel.antennas() {
        return Err(Error::RankDeficient);
    }
    let h = channel.entries();
    let eig = (h * h.adjoint()).symmetric_eigenvalues();
    if eig.min() <= 1e-12 * eig.max().max(f64::MIN_POSITIVE) {
        return Err(Error::RankDeficient);
    }
    let problem = build_constraints(channel, slot, targets)?.to_problem();
    let all: Vec<usize> = (0..problem.num_rows()).collect();
    let (v, duals) = solve_working_set(&problem, &all).ok_or(Error::RankDeficient)?;
    Ok(PrecodeSolution::from_real(&v, duals, all, SolveStatus::Optimal))
}

#[derive(Debug, Clone, PartialEq)]
pub enum AllActiveOutcome {
    /// Every row active is optimal; the solution carries a KKT certificate.
    Optimal(PrecodeSolution),
    /// Some inequality multiplier is negative: the optimal active set is smaller.
    NotApplicable,
    /// The all-active KKT system could not be solved.
    NumericalFailure,
}

/// Solves the 2K-equation KKT system with every constraint held active.
pub fn solve_all_active(
    channel: &ChannelMatrix,
    slot: &SymbolSlot,
    targets: &SnrTargets,
) -> Result<AllActiveOutcome> {
    let set = build_constraints(channel, slot, targets)?;
    let problem = set.to_problem();
    let all: Vec<usize> = (0..problem.num_rows()).collect();
    let Some((v, duals)) = solve_working_set(&problem, &all) else {
        return Ok(AllActiveOutcome::NumericalFailure);
    };
    let scale = problem.rhs_scale();
    if problem.slacks(&v).iter().any(|s| s.abs() > TOL_FEAS * scale) {
        return Ok(AllActiveOutcome::NumericalFailure);
    }
    let dual_ok = (0..problem.num_rows())
        .all(|i| problem.sense(i) == Sense::Eq || duals[i] >= -TOL_DUAL);
    if !dual_ok {
        return Ok(AllActiveOutcome::NotApplicable);
    }
    if !problem.kkt_report(&v, &duals).certifies() {
        return Ok(AllActiveOutcome::NumericalFailure);
    }
    Ok(AllActiveOutcome::Optimal(PrecodeSolution::from_real(
        &v,
        duals,
        all,
        SolveStatus::Optimal,
    )))
}

/// Least-squares fit `x ~ sum_j nu_j h_j^H`.
#[derive(Debug, Clone, PartialEq)]
pub struct RowSpaceFit {
    pub nu: Vec<Complex64>,
    /// `|x - H^H nu|`.
    pub residual: f64,
}

/// Expresses `x` as a combination of the conjugated channel rows.
pub fn rowspace_coefficients(x: &[Complex64], channel: &ChannelMatrix) -> Result<RowSpaceFit> {
    if x.len() != channel.antennas() {
        return Err(Error::DimensionMismatch(format!(
            "transmit vector of length {} for {} antennas",
            x.len(),
            channel.antennas()
        )));
    }
    let basis = channel.entries().adjoint();
    let target = DVector::from_column_slice(x);
    let nu = basis
        .clone()
        .svd(true, true)
        .solve(&target, 1e-14)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let residual = (&target - &basis * &nu).norm();
    Ok(RowSpaceFit {
        nu: nu.iter().copied().collect(),
        residual,
    })
}

/// Per-user received amplitude normalized by `sigma sqrt(zeta_j)`.
pub fn normalized_received(
    channel: &ChannelMatrix,
    x: &[Complex64],
    targets: &SnrTargets,
) -> Vec<Complex64> {
    (0..channel.users())
        .map(|j| channel.apply_row(j, x) / targets.amplitude(j))
        .collect()
}

/// Symbols each user would detect without noise.
pub fn noiseless_detection(
    channel: &ChannelMatrix,
    x: &[Complex64],
    spec: &ConstellationSpec,
    targets: &SnrTargets,
) -> Result<Vec<usize>> {
    normalized_received(channel, x, targets)
        .into_iter()
        .map(|y| spec.detect(y))
        .collect()
}

/// Conventional per-stream SINR `p_j |h_j w_j|^2 / (sum_{i != j} p_i |h_j w_i|^2 + sigma^2)`.
///
/// `precoders` holds one unit-norm beam per column.
pub fn sinr_conventional(
    channel: &ChannelMatrix,
    precoders: &DMatrix<Complex64>,
    powers: &[f64],
    sigma: f64,
) -> Vec<f64> {
    let gains = channel.entries() * precoders;
    (0..channel.users())
        .map(|j| {
            let signal = powers[j] * gains[(j, j)].norm_sqr();
            let interference: f64 = (0..powers.len())
                .filter(|&i| i != j)
                .map(|i| powers[i] * gains[(j, i)].norm_sqr())
                .sum();
            signal / (interference + sigma * sigma)
        })
        .collect()
}

/// Constructive SINR `|h_j x|^2 / sigma^2` of the summed transmit signal.
pub fn sinr_constructive(channel: &ChannelMatrix, x: &[Complex64], sigma: f64) -> Vec<f64> {
    (0..channel.users())
        .map(|j| channel.apply_row(j, x).norm_sqr() / (sigma * sigma))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chanmodel::generate_rayleigh;
    use crate::mqam::build_constellation;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn raw_index(spec: &ConstellationSpec, re: f64, im: f64) -> usize {
        let unit = spec.scale() / std::f64::consts::SQRT_2;
        spec.points()
            .iter()
            .position(|p| (p.re - re * unit).abs() < 1e-12 && (p.im - im * unit).abs() < 1e-12)
            .unwrap()
    }

    #[test]
    fn realify_round_trip() {
        let x = vec![c(1.0, -2.0), c(0.5, 3.0)];
        assert_eq!(complexify(&realify(&x)), x);
    }

    #[test]
    fn rows_reproduce_received_signal() {
        let h = generate_rayleigh(2, 3, 1.0, 3).unwrap();
        let x = vec![c(0.2, -1.0), c(0.7, 0.1), c(-0.4, 0.9)];
        let v = realify(&x);
        for j in 0..2 {
            let (re_row, im_row) = realified_rows(&h, j);
            let y = h.apply_row(j, &x);
            assert_relative_eq!(DVector::from_vec(re_row).dot(&v), y.re, epsilon = 1e-14);
            assert_relative_eq!(DVector::from_vec(im_row).dot(&v), y.im, epsilon = 1e-14);
        }
    }

    #[test]
    fn qpsk_single_user_rows() {
        let spec = build_constellation(4).unwrap();
        let h = ChannelMatrix::from_rows(1, 2, &[c(1.0, 0.5), c(-0.3, 0.2)]).unwrap();
        let idx = [raw_index(&spec, 1.0, 1.0)];
        let slot = SymbolSlot::new(&spec, &idx).unwrap();
        let set = build_constraints(&h, &slot, &SnrTargets::uniform(1, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!(set.rows.len(), 2);
        for row in &set.rows {
            assert_eq!(row.sense, Sense::Geq);
            assert_relative_eq!(row.rhs, 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        }
    }

    #[test]
    fn inner_sixteen_qam_rows_are_equalities() {
        let spec = build_constellation(16).unwrap();
        let h = generate_rayleigh(1, 2, 1.0, 1).unwrap();
        let idx = [raw_index(&spec, 1.0, 1.0)];
        let slot = SymbolSlot::new(&spec, &idx).unwrap();
        let set = build_constraints(&h, &slot, &SnrTargets::uniform(1, 2.0, 1.0).unwrap()).unwrap();
        assert!(set.rows.iter().all(|r| r.sense == Sense::Eq));
    }

    #[test]
    fn eight_qam_negative_extreme_is_flipped() {
        let spec = build_constellation(8).unwrap();
        let h = generate_rayleigh(1, 2, 1.0, 1).unwrap();
        let idx = [raw_index(&spec, -3.0, 1.0)];
        let slot = SymbolSlot::new(&spec, &idx).unwrap();
        let targets = SnrTargets::uniform(1, 2.0, 1.0).unwrap();
        let set = build_constraints(&h, &slot, &targets).unwrap();
        let (re_row, im_row) = realified_rows(&h, 0);
        let re = &set.rows[0];
        assert_eq!((re.sense, re.axis, re.orientation), (Sense::Geq, Axis::Real, -1.0));
        for (a, b) in re.coeffs.iter().zip(&re_row) {
            assert_eq!(*a, -*b);
        }
        let threshold = targets.amplitude(0) * slot.symbol(0).re;
        assert!(threshold < 0.0);
        assert_relative_eq!(re.rhs, -threshold);
        let im = &set.rows[1];
        assert_eq!((im.sense, im.orientation), (Sense::Geq, 1.0));
        assert_eq!(im.coeffs, im_row);
    }

    #[test]
    fn dimension_mismatch() {
        let spec = build_constellation(4).unwrap();
        let h = generate_rayleigh(2, 2, 1.0, 1).unwrap();
        let idx = [0];
        let slot = SymbolSlot::new(&spec, &idx).unwrap();
        let targets = SnrTargets::uniform(2, 1.0, 1.0).unwrap();
        assert!(matches!(
            build_constraints(&h, &slot, &targets),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(SymbolSlot::new(&spec, &[4]).is_err());
        assert!(SnrTargets::uniform(2, 0.0, 1.0).is_err());
        assert!(SnrTargets::uniform(2, 1.0, 0.0).is_err());
    }

    #[test]
    fn single_user_is_mrt() {
        let h = ChannelMatrix::from_rows(1, 3, &[c(0.4, -1.0), c(1.3, 0.2), c(-0.6, 0.5)]).unwrap();
        let norm2 = h.row_norm(0).powi(2);
        let (zeta, sigma) = (3.0, 0.7);
        let targets = SnrTargets::uniform(1, zeta, sigma).unwrap();
        for order in [4, 8, 16] {
            let spec = build_constellation(order).unwrap();
            for k in 0..order {
                let (r, i) = spec.classify(k).unwrap();
                if !(r.is_extreme() && i.is_extreme()) {
                    continue;
                }
                let idx = [k];
                let slot = SymbolSlot::new(&spec, &idx).unwrap();
                let sol = precode_min_power(&h, &slot, &targets).unwrap();
                assert!(sol.is_optimal());
                let d = slot.symbol(0);
                let scale = d * sigma * zeta.sqrt() / norm2;
                for (m, xm) in sol.x.iter().enumerate() {
                    let expected = scale * h.entries()[(0, m)].conj();
                    assert!((xm - expected).norm() < 1e-12);
                }
                assert_relative_eq!(
                    sol.power,
                    zeta * sigma * sigma * d.norm_sqr() / norm2,
                    max_relative = 1e-12
                );
                let fit = rowspace_coefficients(&sol.x, &h).unwrap();
                assert!((fit.nu[0] - scale).norm() < 1e-12);
                let zf = precode_zf_symbol(&h, &slot, &targets).unwrap();
                assert_relative_eq!(zf.power, sol.power, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn orthogonal_users_decouple() {
        let h = ChannelMatrix::from_rows(2, 2, &[c(1.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -0.8)]).unwrap();
        let spec = build_constellation(4).unwrap();
        let targets = SnrTargets::new(vec![2.0, 5.0], 1.0).unwrap();
        let idx = [0, 3];
        let slot = SymbolSlot::new(&spec, &idx).unwrap();
        let sol = precode_min_power(&h, &slot, &targets).unwrap();
        assert_relative_eq!(sol.power, 2.0 / 2.25 + 5.0 / 0.64, max_relative = 1e-12);
    }

    #[test]
    fn orthogonal_inner_symbols_match_zf() {
        let h = ChannelMatrix::from_rows(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(1.0, 0.0), c(0.0, -1.0)]).unwrap();
        let spec = build_constellation(16).unwrap();
        let idx = [raw_index(&spec, 1.0, -1.0), raw_index(&spec, -1.0, 1.0)];
        let slot = SymbolSlot::new(&spec, &idx).unwrap();
        let targets = SnrTargets::uniform(2, 4.0, 1.0).unwrap();
        let ci = precode_min_power(&h, &slot, &targets).unwrap();
        let zf = precode_zf_symbol(&h, &slot, &targets).unwrap();
        for (a, b) in ci.x.iter().zip(&zf.x) {
            assert!((a - b).norm() < 1e-12);
        }
        match solve_all_active(&h, &slot, &targets).unwrap() {
            AllActiveOutcome::Optimal(sol) => assert_relative_eq!(sol.power, ci.power, max_relative = 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zf_hits_symbols_exactly() {
        let spec = build_constellation(16).unwrap();
        let h = generate_rayleigh(2, 3, 1.0, 8).unwrap();
        let idx = [5, 14];
        let slot = SymbolSlot::new(&spec, &idx).unwrap();
        let targets = SnrTargets::new(vec![2.0, 3.0], 0.5).unwrap();
        let zf = precode_zf_symbol(&h, &slot, &targets).unwrap();
        let y = normalized_received(&h, &zf.x, &targets);
        for (j, yj) in y.iter().enumerate() {
            assert!((yj - slot.symbol(j)).norm() < 1e-12);
        }
        let set = build_constraints(&h, &slot, &targets).unwrap();
        let mut all_eq = set.clone();
        for row in &mut all_eq.rows {
            row.sense = Sense::Eq;
        }
        assert!(all_eq.kkt_report(&zf).certifies());
    }

    #[test]
    fn zf_rejects_rank_deficiency() {
        let spec = build_constellation(4).unwrap();
        let idx = [0, 1];
        let slot = SymbolSlot::new(&spec, &idx).unwrap();
        let targets = SnrTargets::uniform(2, 1.0, 1.0).unwrap();
        let collinear = ChannelMatrix::from_rows(2, 2, &[c(1.0, 0.0), c(0.5, 0.5), c(2.0, 0.0), c(1.0, 1.0)]).unwrap();
        assert!(matches!(precode_zf_symbol(&collinear, &slot, &targets), Err(Error::RankDeficient)));
        let wide = generate_rayleigh(2, 1, 1.0, 0).unwrap();
        assert!(matches!(precode_zf_symbol(&wide, &slot, &targets), Err(Error::RankDeficient)));
    }

    #[test]
    fn infeasible_equalities_on_collinear_channel() {
        // Same channel, different inner 16-QAM symbols: no x can satisfy both.
        let spec = build_constellation(16).unwrap();
        let h = ChannelMatrix::from_rows(2, 2, &[c(1.0, 0.0), c(0.5, 0.5), c(1.0, 0.0), c(0.5, 0.5)]).unwrap();
        let idx = [raw_index(&spec, 1.0, 1.0), raw_index(&spec, -1.0, 1.0)];
        let slot = SymbolSlot::new(&spec, &idx).unwrap();
        let sol = precode_min_power(&h, &slot, &SnrTargets::uniform(2, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn rowspace_detects_orthogonal_perturbation() {
        let h = ChannelMatrix::from_rows(1, 2, &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let x = vec![c(2.0, 1.0), c(0.0, 0.3)];
        let fit = rowspace_coefficients(&x, &h).unwrap();
        assert_relative_eq!(fit.residual, 0.3, epsilon = 1e-14);
        assert!((fit.nu[0] - c(2.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn sinr_metrics() {
        let eye = ChannelMatrix::from_rows(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let w = DMatrix::<Complex64>::identity(2, 2);
        let gamma = sinr_conventional(&eye, &w, &[2.0, 3.0], 0.5);
        assert_relative_eq!(gamma[0], 8.0);
        assert_relative_eq!(gamma[1], 12.0);

        // Mixed beams: user 0 sees |h0 w0|^2 = 1/2, |h0 w1|^2 = 1/2.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let w = DMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]);
        let gamma = sinr_conventional(&eye, &w, &[1.0, 1.0], 1.0);
        assert_relative_eq!(gamma[0], 0.5 / 1.5);
        assert_relative_eq!(gamma[1], 0.5 / 1.5);

        let single = ChannelMatrix::from_rows(1, 1, &[c(0.0, 2.0)]).unwrap();
        let w1 = DMatrix::from_element(1, 1, c(1.0, 0.0));
        assert_relative_eq!(sinr_conventional(&single, &w1, &[3.0], 1.0)[0], 12.0);
        assert_relative_eq!(sinr_constructive(&single, &[c(3f64.sqrt(), 0.0)], 1.0)[0], 12.0);

        let x = [c(1.0, 1.0), c(0.0, 2.0)];
        let g = sinr_constructive(&eye, &x, 2.0);
        assert_relative_eq!(g[0], 0.5);
        assert_relative_eq!(g[1], 1.0);
    }

    #[test]
    fn zf_has_no_conventional_interference() {
        let h = generate_rayleigh(2, 3, 1.0, 21).unwrap();
        let gram = h.entries() * h.entries().adjoint();
        let w = h.entries().adjoint() * gram.try_inverse().unwrap();
        let norms: Vec<f64> = (0..2).map(|i| w.column(i).norm()).collect();
        let w_unit = DMatrix::from_fn(3, 2, |r, c| w[(r, c)] / norms[c]);
        let powers: Vec<f64> = norms.iter().map(|n| n * n).collect();
        let gamma = sinr_conventional(&h, &w_unit, &powers, 1.0);
        for j in 0..2 {
            assert_relative_eq!(gamma[j], powers[j] * (h.entries().row(j) * w_unit.column(j))[(0, 0)].norm_sqr(), max_relative = 1e-12);
        }
    }
}
