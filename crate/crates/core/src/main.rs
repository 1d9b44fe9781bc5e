use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use apc::harness::{
    emit_sweep, emit_trial, run_trial, sweep, CampaignConfig, EmitFormat, SweepAxis,
};

#[derive(Parser)]
#[command(
    name = "apc",
    about = "Antenna pattern characterization campaign simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Shared {
    /// Campaign config file (TOML); defaults match the reference setup
    /// (N_tx=10, N_rx=8, Q=100, Θ=50, d=50 m, κ=5 dB, γ=1).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override the base RNG seed from the config.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Output format; omit to emit both.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run one measurement trial and emit the estimated pattern.
    Simulate {
        #[command(flatten)]
        shared: Shared,

        /// Trial index fed into per-trial seeding.
        #[arg(long, default_value_t = 0)]
        trial_index: usize,
    },
    /// Monte Carlo MSE sweep over transmit SNR.
    SweepSnr {
        #[command(flatten)]
        shared: Shared,

        /// SNR values in dB.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,

        /// Trials per axis value.
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Monte Carlo MSE sweep over pilot sequence length.
    SweepQ {
        #[command(flatten)]
        shared: Shared,

        /// Pilot lengths (each must exceed n_tx).
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,

        /// Trials per axis value.
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
}

fn load_config(shared: &Shared) -> Result<CampaignConfig> {
    let mut config = match &shared.config {
        Some(path) => CampaignConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => CampaignConfig::default(),
    };
    if let Some(seed) = shared.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn formats(shared: &Shared) -> Vec<EmitFormat> {
    match shared.format {
        Some(Format::Csv) => vec![EmitFormat::Csv],
        Some(Format::Json) => vec![EmitFormat::Json],
        None => vec![EmitFormat::Csv, EmitFormat::Json],
    }
}

fn ext(format: EmitFormat) -> &'static str {
    match format {
        EmitFormat::Csv => "csv",
        EmitFormat::Json => "json",
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate {
            shared,
            trial_index,
        } => {
            let config = load_config(&shared)?;
            let trial = run_trial(&config, trial_index)?;
            std::fs::create_dir_all(&shared.out)?;
            for f in formats(&shared) {
                let path = shared.out.join(format!("pattern.{}", ext(f)));
                emit_trial(&trial, &config, f, &path)?;
                println!("wrote {}", path.display());
            }
            println!("pattern MSE: {:.3} dB", trial.mse_db);
        }
        Command::SweepSnr {
            shared,
            values,
            trials,
        } => run_sweep(&shared, SweepAxis::SnrDb, &values, trials, "sweep_snr")?,
        Command::SweepQ {
            shared,
            values,
            trials,
        } => run_sweep(&shared, SweepAxis::PilotLen, &values, trials, "sweep_q")?,
    }
    Ok(())
}

fn run_sweep(
    shared: &Shared,
    axis: SweepAxis,
    values: &[f64],
    trials: usize,
    stem: &str,
) -> Result<()> {
    let config = load_config(shared)?;
    let result = sweep(&config, axis, values, trials)?;
    std::fs::create_dir_all(&shared.out)?;
    for f in formats(shared) {
        let path = shared.out.join(format!("{stem}.{}", ext(f)));
        emit_sweep(&result, &config, f, &path)?;
        println!("wrote {}", path.display());
    }
    for (v, m) in result.axis_values.iter().zip(&result.mean_mse_db) {
        println!("{} = {v}: mean MSE {m:.3} dB", result.axis_name);
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
