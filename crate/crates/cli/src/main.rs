//! `rabicorr`: spectra, thermal discord scans, Otto cycles and power-law
//! fits, written as CSV plus a JSON sidecar.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "rabicorr", version, about = "Quantum correlations and Otto cycles in the multiqubit Rabi model")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "RABICORR_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lowest levels relative to the ground state over a coupling grid.
    Spectrum(Common),
    /// Thermal discord against the coupling for one or more N and temperatures.
    DiscordScan(Common),
    /// Work, heats and stage discords of the quantum Otto cycle.
    Otto(Common),
    /// Power-law fit of two CSV columns, optionally per group.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        x_column: Option<String>,
        #[arg(long)]
        y_column: Option<String>,
        #[arg(long)]
        group_by: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        x_shift: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set qubits=[1,2,3]`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output path stem; `.csv` and `.json` are appended.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::load(self.config.as_deref(), &self.overrides)?;
        if let Some(o) = &self.output {
            cfg.output = Some(o.clone());
        }
        if let Some(s) = self.seed {
            cfg.master_seed = Some(s);
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let (cfg, job): (RunConfig, fn(&RunConfig, &std::path::Path) -> Result<commands::Files, CliError>) = match cli.command {
        Command::Spectrum(c) => (c.load()?, commands::spectrum),
        Command::DiscordScan(c) => (c.load()?, commands::discord_scan),
        Command::Otto(c) => (c.load()?, commands::otto),
        Command::Fit { common, input, x_column, y_column, group_by, x_shift } => {
            let mut cfg = common.load()?;
            cfg.input = input.or(cfg.input);
            cfg.x_column = x_column.or(cfg.x_column);
            cfg.y_column = y_column.or(cfg.y_column);
            cfg.group_by = group_by.or(cfg.group_by);
            cfg.x_shift = x_shift.or(cfg.x_shift);
            (cfg, commands::fit)
        }
    };
    let stem = cfg.output_stem()?;
    output::commit(job(&cfg, &stem)?)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
