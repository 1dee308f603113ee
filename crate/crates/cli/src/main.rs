use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use cislp_cli::{preset, run_rows, run_validation, write_csv, Experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "cislp", version, about = "Symbol-level constructive-interference precoding simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Overrides the seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; defaults to the config's `output`, then stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads. Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Runs the experiment described by a config file.
    Run { config: PathBuf },
    /// Runs a shipped preset: fig2, fig3 or fig4.
    Preset { name: String },
    /// Runs the invariant suite.
    Validate {
        #[arg(long)]
        quick: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let mut config = match &cli.command {
        Command::Run { config } => ExperimentConfig::load(config)?,
        Command::Preset { name } => preset(name)?,
        Command::Validate { quick } => {
            let mut c = ExperimentConfig::parse("experiment = \"validate\"")?;
            c.quick = *quick;
            c
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let out = cli.out.or_else(|| config.output.clone());
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        anyhow::ensure!(n >= 1, "--threads must be at least 1");
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("building the thread pool")?;
    pool.install(|| execute(&config, out))
}

fn open(out: Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(&path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn execute(config: &ExperimentConfig, out: Option<PathBuf>) -> anyhow::Result<bool> {
    if config.experiment == Experiment::Validate {
        let checks = run_validation(config.seed, config.quick)?;
        let mut w = open(out)?;
        for check in &checks {
            writeln!(w, "{check}")?;
        }
        w.flush()?;
        return Ok(checks.iter().all(|c| c.passed));
    }
    let rows = run_rows(config)?;
    for row in rows.iter().filter(|r| r.record.flagged) {
        eprintln!(
            "warning: {}-QAM at {} dB: {} of {} slots failed to precode",
            row.record.order,
            row.variable_db,
            row.record.counts.failed_slots,
            row.record.counts.failed_slots + row.record.counts.slots
        );
    }
    write_csv(open(out)?, config.users, &rows)?;
    Ok(true)
}
