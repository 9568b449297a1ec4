use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use eeqt_core::experiments::{run_config, RunConfig, RunError, PRESETS};
use eeqt_core::par::with_threads;
use eeqt_core::Execution;

#[derive(Parser)]
#[command(name = "eeqt", version, about = "Hybrid classical-quantum event simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON configuration.
    Run {
        config: PathBuf,
        /// Overrides the seed in the configuration.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: the configuration's, else ./out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for trajectory presets.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the available presets.
    Presets,
}

fn run(config: PathBuf, seed: Option<u64>, out: Option<PathBuf>, threads: Option<usize>) -> Result<(), RunError> {
    if threads == Some(0) {
        return Err(RunError::Validation("--threads must be at least 1".into()));
    }
    let text = std::fs::read_to_string(&config)
        .map_err(|e| RunError::Validation(format!("cannot read {}: {e}", config.display())))?;
    let cfg = RunConfig::from_json(&text)?;
    let report = with_threads(threads, || run_config(&cfg, seed, out.as_deref(), Execution::default()))?;
    println!("{} -> {}", report.preset, report.output_dir.display());
    for f in &report.files {
        println!("  {f}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Presets => {
            for p in PRESETS {
                println!("{:<14} {}", p.name, p.anchor);
            }
            ExitCode::SUCCESS
        }
        Command::Run { config, seed, out, threads } => match run(config, seed, out, threads) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("eeqt: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
