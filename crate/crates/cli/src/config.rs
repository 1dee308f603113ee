//! Experiment configuration files.
//!
//! Configs are TOML. Every SNR and power value is given in dB and converted
//! to linear scale here. Errors carry the 1-based line of the offending
//! value.

use std::fmt;
use std::path::{Path, PathBuf};

use cislp::db_to_linear;
use cislp::linksim::{PrecoderKind, SimConfig, Sweep, SweepVariable};
use serde::Deserialize;
use toml::Spanned;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// Transmit power against the SNR target.
    PowerSweep,
    /// Energy efficiency against the average channel power.
    EeVsChannel,
    /// Energy efficiency against the SNR target.
    EeVsTarget,
    /// The invariant suite; needs no sweep.
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum PrecoderName {
    Mcipm,
    Zf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Experiment,
    seed: Option<u64>,
    output: Option<String>,
    #[serde(default)]
    quick: bool,
    system: Option<RawSystem>,
    simulation: Option<RawSimulation>,
    sweep: Option<Spanned<RawSweep>>,
    #[serde(default)]
    series: Vec<Spanned<RawSeries>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    antennas: Spanned<i64>,
    users: Spanned<i64>,
    sigma2_db: f64,
    gamma0_db: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulation {
    n_channels: Spanned<i64>,
    n_slots: Spanned<i64>,
    #[serde(default = "default_precoder")]
    precoder: PrecoderName,
    #[serde(default)]
    compute_bound: bool,
}

fn default_precoder() -> PrecoderName {
    PrecoderName::Mcipm
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    start_db: f64,
    stop_db: f64,
    step_db: Spanned<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSeries {
    order: Spanned<i64>,
    zeta_db: Option<Spanned<f64>>,
}

/// One curve of a sweep: a modulation order and, when the sweep does not
/// vary the SNR target, the fixed target it uses.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub order: usize,
    pub zeta_db: Option<f64>,
}

/// A validated experiment, ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub quick: bool,
    pub antennas: usize,
    pub users: usize,
    pub sigma2_db: f64,
    pub gamma0_db: f64,
    pub n_channels: usize,
    pub n_slots: usize,
    pub precoder: PrecoderKind,
    pub compute_bound: bool,
    /// Grid values in dB.
    pub grid_db: Vec<f64>,
    pub series: Vec<Series>,
}

struct Source<'a>(&'a str);

impl Source<'_> {
    fn line(&self, offset: usize) -> usize {
        let end = offset.min(self.0.len());
        self.0[..end].bytes().filter(|&b| b == b'\n').count() + 1
    }

    fn error<T>(&self, spanned: &Spanned<T>, message: impl Into<String>) -> ConfigError {
        ConfigError {
            line: self.line(spanned.span().start),
            message: message.into(),
        }
    }

    fn positive(&self, value: &Spanned<i64>, name: &str) -> Result<usize, ConfigError> {
        match usize::try_from(*value.get_ref()) {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(self.error(value, format!("{name} must be a positive integer"))),
        }
    }
}

fn missing(section: &str) -> ConfigError {
    ConfigError {
        line: 1,
        message: format!("missing [{section}] table"),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let src = Source(text);
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError {
            line: e.span().map_or(1, |s| src.line(s.start)),
            message: e.message().to_string(),
        })?;

        let mut config = ExperimentConfig {
            experiment: raw.experiment,
            seed: raw.seed.unwrap_or(0),
            output: raw.output.map(PathBuf::from),
            quick: raw.quick,
            antennas: 0,
            users: 0,
            sigma2_db: 0.0,
            gamma0_db: 0.0,
            n_channels: 0,
            n_slots: 0,
            precoder: PrecoderKind::Mcipm,
            compute_bound: false,
            grid_db: Vec::new(),
            series: Vec::new(),
        };
        if raw.experiment == Experiment::Validate {
            return Ok(config);
        }

        let system = raw.system.ok_or_else(|| missing("system"))?;
        config.antennas = src.positive(&system.antennas, "antennas")?;
        config.users = src.positive(&system.users, "users")?;
        config.sigma2_db = system.sigma2_db;
        config.gamma0_db = system.gamma0_db.unwrap_or(0.0);

        let sim = raw.simulation.ok_or_else(|| missing("simulation"))?;
        config.n_channels = src.positive(&sim.n_channels, "n_channels")?;
        config.n_slots = src.positive(&sim.n_slots, "n_slots")?;
        config.precoder = match sim.precoder {
            PrecoderName::Mcipm => PrecoderKind::Mcipm,
            PrecoderName::Zf => PrecoderKind::ZeroForcing,
        };
        config.compute_bound = sim.compute_bound;

        let sweep = raw.sweep.ok_or_else(|| missing("sweep"))?;
        config.grid_db = grid(&src, &sweep)?;

        if raw.series.is_empty() {
            return Err(missing("[series]"));
        }
        let fixed_target = raw.experiment == Experiment::EeVsChannel;
        for s in &raw.series {
            let inner = s.get_ref();
            let order = src.positive(&inner.order, "order")?;
            if ![4, 8, 16].contains(&order) {
                return Err(src.error(&inner.order, format!("unsupported order {order}, expected 4, 8 or 16")));
            }
            let zeta_db = match (&inner.zeta_db, fixed_target) {
                (Some(z), true) => Some(*z.get_ref()),
                (None, true) => return Err(src.error(s, "series needs zeta_db when the sweep varies the channel power")),
                (Some(z), false) => return Err(src.error(z, "zeta_db is swept here; remove it from the series")),
                (None, false) => None,
            };
            config.series.push(Series { order, zeta_db });
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
    }

    pub fn sweep_variable(&self) -> SweepVariable {
        match self.experiment {
            Experiment::EeVsChannel => SweepVariable::Gamma0,
            _ => SweepVariable::ZetaTh,
        }
    }

    pub fn sweep(&self) -> Sweep {
        Sweep {
            variable: self.sweep_variable(),
            grid: self.grid_db.iter().map(|&d| db_to_linear(d)).collect(),
        }
    }

    /// Simulation settings for one series. The swept quantity is filled in
    /// per grid point by the simulator.
    pub fn sim_config(&self, series: &Series) -> SimConfig {
        let zeta = db_to_linear(series.zeta_db.unwrap_or(0.0));
        SimConfig {
            antennas: self.antennas,
            users: self.users,
            order: series.order,
            zeta: vec![zeta; self.users],
            sigma2: db_to_linear(self.sigma2_db),
            gamma0: db_to_linear(self.gamma0_db),
            n_channels: self.n_channels,
            n_slots: self.n_slots,
            seed: self.seed,
            precoder: self.precoder,
            compute_bound: self.compute_bound,
        }
    }
}

fn grid(src: &Source, sweep: &Spanned<RawSweep>) -> Result<Vec<f64>, ConfigError> {
    let s = sweep.get_ref();
    if !(s.start_db.is_finite() && s.stop_db.is_finite()) {
        return Err(src.error(sweep, "grid bounds must be finite"));
    }
    if s.start_db > s.stop_db {
        return Err(src.error(sweep, "grid start_db exceeds stop_db"));
    }
    let step = *s.step_db.get_ref();
    if !(step > 0.0 && step.is_finite()) {
        return Err(src.error(&s.step_db, "step_db must be positive"));
    }
    // Index-based so rounding never adds or drops the endpoint.
    let count = ((s.stop_db - s.start_db) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| s.start_db + i as f64 * step).collect())
}
