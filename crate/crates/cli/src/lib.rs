//! Experiment runner behind the `cislp` binary.

pub mod config;
pub mod report;

use cislp::linksim::run_sweep;
use cislp::validate::{run_suite, CheckResult};

pub use config::{ConfigError, Experiment, ExperimentConfig, Series};
pub use report::{write_csv, Row};

pub const PRESET_NAMES: [&str; 3] = ["fig2", "fig3", "fig4"];

/// Text of a shipped preset config.
pub fn preset_text(name: &str) -> Option<&'static str> {
    match name {
        "fig2" => Some(include_str!("../presets/fig2.toml")),
        "fig3" => Some(include_str!("../presets/fig3.toml")),
        "fig4" => Some(include_str!("../presets/fig4.toml")),
        _ => None,
    }
}

pub fn preset(name: &str) -> anyhow::Result<ExperimentConfig> {
    let text = preset_text(name).ok_or_else(|| {
        anyhow::anyhow!("unknown preset {name:?}, expected one of {}", PRESET_NAMES.join(", "))
    })?;
    Ok(ExperimentConfig::parse(text)?)
}

/// Runs every series of a sweep experiment, series by series.
pub fn run_rows(config: &ExperimentConfig) -> cislp::Result<Vec<Row>> {
    let sweep = config.sweep();
    let mut rows = Vec::with_capacity(config.series.len() * config.grid_db.len());
    for series in &config.series {
        let records = run_sweep(&config.sim_config(series), &sweep)?;
        rows.extend(
            config
                .grid_db
                .iter()
                .zip(records)
                .map(|(&variable_db, record)| Row { variable_db, record }),
        );
    }
    Ok(rows)
}

pub fn run_validation(seed: u64, quick: bool) -> cislp::Result<Vec<CheckResult>> {
    run_suite(seed, quick)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        for name in PRESET_NAMES {
            let c = preset(name).unwrap();
            assert!(c.n_channels >= 1000 && c.n_slots >= 20, "{name}");
        }
        assert!(preset("fig9").is_err());
    }

    #[test]
    fn preset_settings() {
        let fig2 = preset("fig2").unwrap();
        assert_eq!((fig2.antennas, fig2.users), (2, 2));
        assert_eq!(fig2.grid_db, vec![0.0, 4.0, 8.0, 12.0, 16.0, 20.0]);
        assert!(fig2.compute_bound);
        let fig3 = preset("fig3").unwrap();
        assert_eq!(fig3.experiment, Experiment::EeVsChannel);
        assert_eq!(
            fig3.series,
            vec![Series { order: 4, zeta_db: Some(6.0) }, Series { order: 8, zeta_db: Some(9.0) }]
        );
        let fig4 = preset("fig4").unwrap();
        assert_eq!((fig4.antennas, fig4.users), (3, 2));
        assert_eq!(fig4.series.iter().map(|s| s.order).collect::<Vec<_>>(), vec![8, 16]);
    }

    #[test]
    fn small_run_produces_one_row_per_point() {
        let mut c = preset("fig2").unwrap();
        c.n_channels = 3;
        c.n_slots = 2;
        let rows = run_rows(&c).unwrap();
        assert_eq!(rows.len(), 18);
        assert_eq!(rows[6].record.order, 8);
        assert_eq!(rows[7].variable_db, 4.0);
    }
}
