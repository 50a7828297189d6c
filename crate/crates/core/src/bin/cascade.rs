use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cascade::experiments::{execute, ExperimentConfig, GridScale, RunKind};
use cascade::CascadeError;

#[derive(Parser)]
#[command(name = "cascade", version, about = "Biexciton cascade simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Occupations and photon numbers over time.
    Dynamics(Common),
    /// Two-photon matrix, concurrence and pair counts.
    Concurrence(Common),
    /// Concurrence over (Δ_B, α₁) with optimized second pulses.
    MapFig2(Common),
    /// Optimized final biexciton population over (Δ_B, α₁).
    MapFig5(Common),
    /// Concurrence and pair counts against the cavity coupling.
    SweepG(Common),
    /// Photon numbers and concurrence across photon truncations.
    ValidateTruncation(Common),
    /// Second-pulse search for one parameter set.
    Optimize(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = Scale::Coarse)]
    grid_scale: Scale,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scale {
    Coarse,
    Paper,
}

impl Command {
    fn split(&self) -> (RunKind, &Common) {
        match self {
            Command::Dynamics(c) => (RunKind::Dynamics, c),
            Command::Concurrence(c) => (RunKind::Concurrence, c),
            Command::MapFig2(c) => (RunKind::MapFig2, c),
            Command::MapFig5(c) => (RunKind::MapFig5, c),
            Command::SweepG(c) => (RunKind::SweepGFig6, c),
            Command::ValidateTruncation(c) => (RunKind::ValidateTruncationFig7, c),
            Command::Optimize(c) => (RunKind::Optimize, c),
        }
    }
}

fn run(cli: &Cli) -> Result<serde_json::Value, CascadeError> {
    let (kind, common) = cli.command.split();
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CascadeError::Config(e.to_string()))?;
    }
    let (cfg, text) = ExperimentConfig::load(&common.config)?;
    if cfg.kind != kind {
        return Err(CascadeError::invalid(
            "kind",
            format!("config declares `{}` but subcommand runs `{}`", cfg.kind.name(), kind.name()),
        ));
    }
    let scale = match common.grid_scale {
        Scale::Coarse => GridScale::Coarse,
        Scale::Paper => GridScale::Paper,
    };
    let manifest = execute(&cfg, &text, scale, &common.out)?;
    Ok(serde_json::to_value(&manifest).unwrap_or_default())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(manifest) => {
            println!("{}", serde_json::to_string_pretty(&manifest).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let doc = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{doc}");
            ExitCode::from(2)
        }
    }
}
