//! Monte Carlo link-level simulation.
//!
//! For each channel realization `c` and symbol slot `s` the simulator draws
//! user symbols, precodes, adds `CN(0, sigma^2)` receiver noise, normalizes
//! each sample by `sigma sqrt(zeta_j)` and detects on the unit constellation.
//! Channel, symbol and noise draws come from substreams keyed by `(c, s)` only,
//! so every sweep point sees the same channels, symbols and noise, and the
//! result does not depend on the rayon thread count.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::chanmodel::{generate_rayleigh, ChannelMatrix};
use crate::mqam::{build_constellation, ConstellationSpec};
use crate::rng::{child_seed, substream, trial_stream, Domain};
use crate::slp::{precode_min_power, precode_zf_symbol, PrecodeSolution, SnrTargets, SymbolSlot};
use crate::solver::{solve_multicast_sdp, SdpProblem, SolveStatus};
use crate::{Error, Result};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecoderKind {
    /// Minimum-power constructive-interference precoder.
    Mcipm,
    /// Symbol-level zero forcing.
    ZeroForcing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub antennas: usize,
    pub users: usize,
    pub order: usize,
    /// Per-user SNR targets, linear.
    pub zeta: Vec<f64>,
    /// Noise variance, linear.
    pub sigma2: f64,
    /// Average channel power, linear.
    pub gamma0: f64,
    pub n_channels: usize,
    pub n_slots: usize,
    pub seed: u64,
    pub precoder: PrecoderKind,
    pub compute_bound: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.antennas == 0 || self.users == 0 || self.n_channels == 0 || self.n_slots == 0 {
            return Err(Error::InvalidArgument(
                "antennas, users, n_channels and n_slots must be at least 1".into(),
            ));
        }
        if self.zeta.len() != self.users {
            return Err(Error::DimensionMismatch(format!(
                "{} SNR targets for {} users",
                self.zeta.len(),
                self.users
            )));
        }
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !self.zeta.iter().all(|&z| positive(z)) || !positive(self.sigma2) || !positive(self.gamma0) {
            return Err(Error::InvalidArgument(
                "SNR targets, noise variance and channel power must be positive".into(),
            ));
        }
        build_constellation(self.order)?;
        Ok(())
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    /// Common SNR target of all users.
    ZetaTh,
    /// Average channel power.
    Gamma0,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub variable: SweepVariable,
    /// Linear-scale grid values.
    pub grid: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrialCounts {
    pub channels: usize,
    /// Slots precoded successfully (the SER denominator).
    pub slots: u64,
    pub failed_slots: u64,
    /// Symbol errors per user.
    pub errors: Vec<u64>,
    pub bound_failures: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    /// Value of the swept variable (linear) when produced by a sweep.
    pub point: Option<f64>,
    pub order: usize,
    /// Mean per-slot `|x|^2`.
    pub avg_tx_power: f64,
    pub ser: Vec<f64>,
    /// Bits per symbol times symbol success rate, per user.
    pub effective_rate: Vec<f64>,
    /// Total effective rate over average transmit power.
    pub energy_efficiency: f64,
    /// Mean over channels of the per-channel energy efficiency.
    pub ee_channel_mean: f64,
    /// Mean multicast SDP trace over channels, when requested.
    pub ci_lower_bound: Option<f64>,
    pub counts: TrialCounts,
    /// More than 1% of the slots failed to precode.
    pub flagged: bool,
}

impl MetricsRecord {
    /// 95% normal-approximation interval of user `j`'s SER.
    pub fn ser_interval(&self, user: usize) -> (f64, f64) {
        let n = self.counts.slots.max(1) as f64;
        let p = self.ser[user];
        let half = Z95 * (p * (1.0 - p) / n).sqrt();
        ((p - half).max(0.0), (p + half).min(1.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome {
    pub power: f64,
    pub detected: Vec<usize>,
    pub solution: PrecodeSolution,
}

fn precode(
    channel: &ChannelMatrix,
    slot: &SymbolSlot,
    targets: &SnrTargets,
    precoder: PrecoderKind,
) -> Result<PrecodeSolution> {
    let solution = match precoder {
        PrecoderKind::Mcipm => precode_min_power(channel, slot, targets)?,
        PrecoderKind::ZeroForcing => precode_zf_symbol(channel, slot, targets)?,
    };
    if solution.status != SolveStatus::Optimal {
        return Err(Error::Precode(solution.status));
    }
    Ok(solution)
}

/// Precodes one slot, passes it through the channel and detects.
///
/// With `noise = None` the receivers see `h_j x` exactly.
pub fn run_slot<R: Rng + ?Sized>(
    channel: &ChannelMatrix,
    slot: &SymbolSlot,
    targets: &SnrTargets,
    precoder: PrecoderKind,
    mut noise: Option<&mut R>,
) -> Result<SlotOutcome> {
    let solution = precode(channel, slot, targets, precoder)?;
    let sigma = targets.sigma();
    let noise_std = sigma / std::f64::consts::SQRT_2;
    let mut detected = Vec::with_capacity(channel.users());
    for j in 0..channel.users() {
        let mut y = channel.apply_row(j, &solution.x);
        if let Some(rng) = noise.as_deref_mut() {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            y += crate::Complex64::new(noise_std * re, noise_std * im);
        }
        detected.push(slot.spec().detect(y / targets.amplitude(j))?);
    }
    Ok(SlotOutcome {
        power: solution.power,
        detected,
        solution,
    })
}

/// Uniform i.i.d. symbol indices for slot `s` of channel `c`.
pub fn draw_symbols(seed: u64, channel: usize, slot: usize, users: usize, order: usize) -> Vec<usize> {
    let mut rng = substream(seed, Domain::Symbols, trial_stream(channel, slot));
    (0..users).map(|_| rng.random_range(0..order)).collect()
}

/// Channel realization `c` of a simulation.
pub fn draw_channel(config: &SimConfig, channel: usize) -> Result<ChannelMatrix> {
    generate_rayleigh(
        config.users,
        config.antennas,
        config.gamma0,
        child_seed(config.seed, channel as u64),
    )
}

#[derive(Debug, Default)]
struct ChannelTally {
    power_sum: f64,
    slots: u64,
    failed: u64,
    errors: Vec<u64>,
    bound: Option<f64>,
    bound_failed: bool,
}

fn simulate_channel(config: &SimConfig, spec: &ConstellationSpec, targets: &SnrTargets, c: usize) -> Result<ChannelTally> {
    let channel = draw_channel(config, c)?;
    let mut tally = ChannelTally {
        errors: vec![0; config.users],
        ..Default::default()
    };
    for s in 0..config.n_slots {
        let indices = draw_symbols(config.seed, c, s, config.users, config.order);
        let slot = SymbolSlot::new(spec, &indices)?;
        let mut noise = substream(config.seed, Domain::Noise, trial_stream(c, s));
        match run_slot(&channel, &slot, targets, config.precoder, Some(&mut noise)) {
            Ok(outcome) => {
                tally.power_sum += outcome.power;
                tally.slots += 1;
                for (j, (&sent, &got)) in indices.iter().zip(&outcome.detected).enumerate() {
                    tally.errors[j] += u64::from(sent != got);
                }
            }
            Err(Error::Precode(_)) | Err(Error::RankDeficient) => tally.failed += 1,
            Err(e) => return Err(e),
        }
    }
    if config.compute_bound {
        let rhs: Vec<f64> = config.zeta.iter().map(|z| z * config.sigma2).collect();
        let sdp = solve_multicast_sdp(&SdpProblem::multicast(&channel, &rhs)?);
        if sdp.status == SolveStatus::Optimal {
            tally.bound = Some(sdp.trace);
        } else {
            tally.bound_failed = true;
        }
    }
    Ok(tally)
}

/// Simulates one operating point.
pub fn run_point(config: &SimConfig) -> Result<MetricsRecord> {
    config.validate()?;
    let spec = build_constellation(config.order)?;
    let targets = SnrTargets::new(config.zeta.clone(), config.sigma())?;
    let tallies = (0..config.n_channels)
        .into_par_iter()
        .map(|c| simulate_channel(config, &spec, &targets, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(config, &spec, &tallies))
}

fn aggregate(config: &SimConfig, spec: &ConstellationSpec, tallies: &[ChannelTally]) -> MetricsRecord {
    let bits = f64::from(spec.bits_per_symbol());
    let mut counts = TrialCounts {
        channels: tallies.len(),
        errors: vec![0; config.users],
        ..Default::default()
    };
    let mut power_sum = 0.0;
    let mut bound_sum = 0.0;
    let mut bound_count = 0usize;
    let mut ee_sum = 0.0;
    let mut ee_count = 0usize;
    for t in tallies {
        power_sum += t.power_sum;
        counts.slots += t.slots;
        counts.failed_slots += t.failed;
        for (total, e) in counts.errors.iter_mut().zip(&t.errors) {
            *total += e;
        }
        if let Some(b) = t.bound {
            bound_sum += b;
            bound_count += 1;
        }
        counts.bound_failures += u64::from(t.bound_failed);
        if t.slots > 0 {
            let n = t.slots as f64;
            let rate: f64 = t.errors.iter().map(|&e| bits * (1.0 - e as f64 / n)).sum();
            ee_sum += rate / (t.power_sum / n);
            ee_count += 1;
        }
    }
    let n = counts.slots as f64;
    let avg_tx_power = power_sum / n;
    let ser: Vec<f64> = counts.errors.iter().map(|&e| e as f64 / n).collect();
    let effective_rate: Vec<f64> = ser.iter().map(|s| bits * (1.0 - s)).collect();
    let energy_efficiency = effective_rate.iter().sum::<f64>() / avg_tx_power;
    let attempted = counts.slots + counts.failed_slots;
    MetricsRecord {
        point: None,
        order: config.order,
        avg_tx_power,
        ser,
        effective_rate,
        energy_efficiency,
        ee_channel_mean: ee_sum / ee_count as f64,
        ci_lower_bound: (config.compute_bound && bound_count > 0).then(|| bound_sum / bound_count as f64),
        flagged: counts.failed_slots as f64 > 0.01 * attempted as f64,
        counts,
    }
}

/// One [`MetricsRecord`] per grid point of `sweep`.
pub fn run_sweep(config: &SimConfig, sweep: &Sweep) -> Result<Vec<MetricsRecord>> {
    if sweep.grid.is_empty() {
        return Err(Error::InvalidArgument("sweep grid is empty".into()));
    }
    sweep
        .grid
        .iter()
        .map(|&value| {
            let mut point = config.clone();
            match sweep.variable {
                SweepVariable::ZetaTh => point.zeta = vec![value; config.users],
                SweepVariable::Gamma0 => point.gamma0 = value,
            }
            let mut record = run_point(&point)?;
            record.point = Some(value);
            Ok(record)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn config(order: usize, precoder: PrecoderKind) -> SimConfig {
        SimConfig {
            antennas: 2,
            users: 2,
            order,
            zeta: vec![4.0, 4.0],
            sigma2: 1.0,
            gamma0: 1.0,
            n_channels: 40,
            n_slots: 10,
            seed: 5,
            precoder,
            compute_bound: false,
        }
    }

    #[test]
    fn noiseless_slots_are_error_free() {
        for order in [4, 8, 16] {
            let spec = build_constellation(order).unwrap();
            let cfg = config(order, PrecoderKind::Mcipm);
            let targets = SnrTargets::new(cfg.zeta.clone(), cfg.sigma()).unwrap();
            for c in 0..50 {
                let h = draw_channel(&cfg, c).unwrap();
                let indices = draw_symbols(cfg.seed, c, 0, 2, order);
                let slot = SymbolSlot::new(&spec, &indices).unwrap();
                for precoder in [PrecoderKind::Mcipm, PrecoderKind::ZeroForcing] {
                    let out = run_slot::<crate::rng::SimRng>(&h, &slot, &targets, precoder, None).unwrap();
                    assert_eq!(out.detected, indices);
                }
            }
        }
    }

    #[test]
    fn record_identities() {
        let mut cfg = config(16, PrecoderKind::Mcipm);
        cfg.compute_bound = true;
        let r = run_point(&cfg).unwrap();
        let bits = 4.0;
        for j in 0..2 {
            assert!((0.0..=1.0).contains(&r.ser[j]));
            assert!((r.effective_rate[j] - bits * (1.0 - r.ser[j])).abs() <= 1e-12);
        }
        let ee = r.effective_rate.iter().sum::<f64>() / r.avg_tx_power;
        assert!((r.energy_efficiency - ee).abs() <= 1e-12);
        assert_eq!(r.counts.slots, 400);
        assert!(r.ci_lower_bound.is_some());
        assert!(!r.flagged);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let cfg = config(8, PrecoderKind::Mcipm);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| run_point(&cfg)).unwrap();
        let b = four.install(|| run_point(&cfg)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zeta_sweep_scales_power_exactly() {
        let cfg = config(16, PrecoderKind::Mcipm);
        let sweep = Sweep {
            variable: SweepVariable::ZetaTh,
            grid: vec![2.0, 4.0],
        };
        let r = run_sweep(&cfg, &sweep).unwrap();
        assert_relative_eq!(r[1].avg_tx_power / r[0].avg_tx_power, 2.0, max_relative = 1e-10);
        assert_eq!(r[0].point, Some(2.0));
    }

    #[test]
    fn gamma0_sweep_scales_power_inversely() {
        let cfg = config(4, PrecoderKind::ZeroForcing);
        let sweep = Sweep {
            variable: SweepVariable::Gamma0,
            grid: vec![1.0, 10.0],
        };
        let r = run_sweep(&cfg, &sweep).unwrap();
        assert_relative_eq!(r[0].avg_tx_power / r[1].avg_tx_power, 10.0, max_relative = 1e-10);
        // SER depends only on the SNR target.
        assert_eq!(r[0].ser, r[1].ser);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = config(4, PrecoderKind::Mcipm);
        cfg.zeta = vec![1.0];
        assert!(run_point(&cfg).is_err());
        let mut cfg = config(32, PrecoderKind::Mcipm);
        assert!(run_point(&cfg).is_err());
        cfg.order = 4;
        cfg.n_slots = 0;
        assert!(run_point(&cfg).is_err());
        let sweep = Sweep {
            variable: SweepVariable::ZetaTh,
            grid: vec![],
        };
        assert!(run_sweep(&config(4, PrecoderKind::Mcipm), &sweep).is_err());
    }

    #[test]
    fn zf_with_more_users_than_antennas_is_flagged() {
        let mut cfg = config(4, PrecoderKind::ZeroForcing);
        cfg.users = 3;
        cfg.zeta = vec![1.0; 3];
        cfg.n_channels = 2;
        cfg.n_slots = 2;
        let r = run_point(&cfg).unwrap();
        assert_eq!(r.counts.failed_slots, 4);
        assert!(r.flagged);
    }
}
