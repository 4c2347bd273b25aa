use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use outage_kit::config::load_config;
use outage_kit::montecarlo::THREADS_ENV;
use outage_kit::sweep::{run_sweep, SweepStatus};
use outage_kit::system::RelayMode;

#[derive(Parser)]
#[command(name = "outage-kit", version, about = "Outage rate and duration of opportunistic relaying")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the transmit SNR and write normalized AOR/AOD as CSV.
    Sweep(SweepArgs),
}

#[derive(clap::Args)]
struct SweepArgs {
    /// Scenario file.
    #[arg(long)]
    config: PathBuf,
    /// Override the relaying mode.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Override the number of relays.
    #[arg(long)]
    relays: Option<usize>,
    /// Run the Monte Carlo simulator alongside the closed forms.
    #[arg(long)]
    validate: bool,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Df,
    Af,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(SweepStatus::ComputationError.code() as u8)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<SweepStatus> {
    let Command::Sweep(args) = cli.command;
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
        }
    }
    let mut spec = load_config(&args.config).with_context(|| format!("loading {}", args.config.display()))?;
    if let Some(mode) = args.mode {
        spec = spec.with_mode(match mode {
            Mode::Df => RelayMode::Df,
            Mode::Af => RelayMode::Af,
        });
    }
    if let Some(m) = args.relays {
        spec = spec.with_relays(m).context("--relays")?;
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    spec.validate |= args.validate;

    let result = run_sweep(&spec);
    for row in &result.rows {
        if let Some(e) = row.error() {
            eprintln!("snr_db = {}: {e}", row.snr_db);
        } else if row.agree == Some(false) {
            eprintln!("snr_db = {}: simulation disagrees with the closed form", row.snr_db);
        }
    }
    match &args.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut out = BufWriter::new(file);
            result.write_csv(&mut out)?;
            out.flush()?;
        }
        None => result.write_csv(io::stdout().lock())?,
    }
    Ok(result.status())
}
