//! Invariant checks run by `cislp validate`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::chanmodel::{generate_rayleigh, ChannelMatrix};
use crate::mqam::build_constellation;
use crate::rng::{child_seed, substream, Domain, SimRng};
use crate::slp::{
    build_constraints, noiseless_detection, precode_min_power, precode_zf_symbol, rowspace_coefficients,
    SnrTargets, SymbolSlot,
};
use crate::solver::{
    solve_active_set, solve_enumerate, solve_multicast_sdp, LeastNormProblem, SdpProblem, Sense, SolveStatus,
};
use crate::{Complex64, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

/// Random least-norm problem: `dim` in 1..=8, up to 6 inequalities and at
/// most `dim - 1` (capped at 2) equalities, Gaussian data.
pub fn random_least_norm_problem<R: Rng + ?Sized>(rng: &mut R) -> LeastNormProblem {
    let dim = rng.random_range(1..=8usize);
    let n_ineq = rng.random_range(0..=6usize);
    let n_eq = rng.random_range(0..=(dim - 1).min(2));
    let mut problem = LeastNormProblem::new(dim);
    let mut gauss = || -> f64 { StandardNormal.sample(rng) };
    for k in 0..n_eq + n_ineq {
        let coeffs: Vec<f64> = (0..dim).map(|_| gauss()).collect();
        let rhs = gauss();
        let sense = if k < n_eq { Sense::Eq } else { Sense::Geq };
        problem.push(&coeffs, sense, rhs).expect("generated rows are well formed");
    }
    problem
}

/// Runs every check. `quick` shrinks the instance counts about tenfold.
pub fn run_suite(seed: u64, quick: bool) -> Result<Vec<CheckResult>> {
    let scale = if quick { 10 } else { 1 };
    Ok(vec![
        check_oracle_equivalence(seed, 10_000 / scale),
        check_precoder_invariants(seed, 1_000 / scale)?,
        check_target_scaling(seed, 200 / scale)?,
        check_sdp_closed_forms(seed, 50 / scale)?,
    ])
}

fn check_oracle_equivalence(seed: u64, instances: usize) -> CheckResult {
    let mut rng = substream(seed, Domain::Validation, 0);
    let mut worst: f64 = 0.0;
    let mut mismatches = 0;
    for _ in 0..instances {
        let p = random_least_norm_problem(&mut rng);
        let a = solve_active_set(&p);
        let Ok(b) = solve_enumerate(&p) else {
            mismatches += 1;
            continue;
        };
        if a.status != b.status {
            mismatches += 1;
            continue;
        }
        if a.status == SolveStatus::Optimal {
            let gap = (a.objective() - b.objective()).abs() / b.objective().max(1e-300);
            let gap = if b.objective() == 0.0 { a.objective() } else { gap };
            worst = worst.max(gap);
        }
    }
    CheckResult {
        name: "oracle_equivalence",
        passed: mismatches == 0 && worst <= 1e-9,
        detail: format!("{instances} instances, {mismatches} status mismatches, worst relative objective gap {worst:.3e}"),
    }
}

fn random_slot_indices(rng: &mut SimRng, users: usize, order: usize) -> Vec<usize> {
    (0..users).map(|_| rng.random_range(0..order)).collect()
}

fn check_precoder_invariants(seed: u64, instances: usize) -> Result<CheckResult> {
    let mut failures = Vec::new();
    let mut worst_kkt: f64 = 0.0;
    let mut worst_rowspace: f64 = 0.0;
    let mut worst_dominance = f64::NEG_INFINITY;
    for (o, order) in [4usize, 8, 16].into_iter().enumerate() {
        let spec = build_constellation(order)?;
        let mut rng = substream(seed, Domain::Validation, 1 + o as u64);
        for i in 0..instances {
            let h = generate_rayleigh(2, 2, 1.0, child_seed(seed, (o * instances + i) as u64))?;
            let zeta = 10f64.powf(rng.random_range(0.0..2.0));
            let targets = SnrTargets::uniform(2, zeta, 1.0)?;
            let indices = random_slot_indices(&mut rng, 2, order);
            let slot = SymbolSlot::new(&spec, &indices)?;
            let ci = precode_min_power(&h, &slot, &targets)?;
            if !ci.is_optimal() {
                failures.push(format!("{order}-QAM #{i}: {:?}", ci.status));
                continue;
            }
            let report = build_constraints(&h, &slot, &targets)?.kkt_report(&ci);
            worst_kkt = worst_kkt.max(report.stationarity).max(report.complementarity);
            if !report.certifies() {
                failures.push(format!("{order}-QAM #{i}: KKT {report:?}"));
            }
            let fit = rowspace_coefficients(&ci.x, &h)?;
            worst_rowspace = worst_rowspace.max(fit.residual / ci.power.sqrt().max(1e-300));
            if fit.residual > 1e-8 * ci.power.sqrt() {
                failures.push(format!("{order}-QAM #{i}: row-space residual {:.3e}", fit.residual));
            }
            let zf = precode_zf_symbol(&h, &slot, &targets)?;
            worst_dominance = worst_dominance.max(ci.power - zf.power);
            if ci.power > zf.power + 1e-9 {
                failures.push(format!("{order}-QAM #{i}: CI power exceeds ZF"));
            }
            if noiseless_detection(&h, &ci.x, &spec, &targets)? != indices {
                failures.push(format!("{order}-QAM #{i}: noiseless detection mismatch"));
            }
        }
    }
    Ok(CheckResult {
        name: "precoder_kkt_dominance_detection",
        passed: failures.is_empty(),
        detail: format!(
            "{} instances per order, worst KKT residual {worst_kkt:.3e}, worst row-space residual {worst_rowspace:.3e}, max(CI - ZF) {worst_dominance:.3e}{}",
            instances,
            failures.first().map(|f| format!(", first failure: {f}")).unwrap_or_default()
        ),
    })
}

fn check_target_scaling(seed: u64, instances: usize) -> Result<CheckResult> {
    let spec = build_constellation(16)?;
    let mut rng = substream(seed, Domain::Validation, 10);
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let h = generate_rayleigh(2, 3, 1.0, child_seed(seed ^ 0x5ca1e, i as u64))?;
        let indices = random_slot_indices(&mut rng, 2, 16);
        let slot = SymbolSlot::new(&spec, &indices)?;
        let targets = SnrTargets::new(vec![rng.random_range(1.0..10.0), rng.random_range(1.0..10.0)], 1.0)?;
        let factor = rng.random_range(0.1..10.0);
        let base = precode_min_power(&h, &slot, &targets)?;
        let scaled = precode_min_power(&h, &slot, &targets.scaled(factor)?)?;
        worst = worst.max((scaled.power / base.power / factor - 1.0).abs());
    }
    Ok(CheckResult {
        name: "target_scaling",
        passed: worst <= 1e-10,
        detail: format!("{instances} instances, worst relative deviation {worst:.3e}"),
    })
}

fn check_sdp_closed_forms(seed: u64, instances: usize) -> Result<CheckResult> {
    let mut rng = substream(seed, Domain::Validation, 20);
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let h = generate_rayleigh(1, 3, 1.0, child_seed(seed ^ 0x5d9, i as u64))?;
        let zeta = rng.random_range(1.0..100.0);
        let sdp = solve_multicast_sdp(&SdpProblem::multicast(&h, &[zeta])?);
        let expected = zeta / h.row_norm(0).powi(2);
        worst = worst.max((sdp.trace - expected).abs() / expected);

        // Orthogonal pair: h_2 is h_1 rotated into its orthogonal complement.
        let a = Complex64::new(rng.random_range(0.2..2.0), rng.random_range(-1.0..1.0));
        let b = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(0.2..2.0));
        let scale2 = rng.random_range(0.3..3.0);
        let pair = ChannelMatrix::from_rows(2, 2, &[a, b, -b.conj() * scale2, a.conj() * scale2])?;
        let zetas = [rng.random_range(1.0..50.0), rng.random_range(1.0..50.0)];
        let sdp = solve_multicast_sdp(&SdpProblem::multicast(&pair, &zetas)?);
        let expected: f64 = (0..2).map(|j| zetas[j] / pair.row_norm(j).powi(2)).sum();
        worst = worst.max((sdp.trace - expected).abs() / expected);
    }
    Ok(CheckResult {
        name: "multicast_sdp_closed_forms",
        passed: worst <= 1e-6,
        detail: format!("{instances} instances of each kind, worst relative error {worst:.3e}"),
    })
}
