use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use orbitron_cli::{run_command, write_outputs, CliError, Command, RunConfig, RunOptions};

/// Orbits and stability of a spinning magnet between two fixed poles.
#[derive(Debug, Parser)]
#[command(name = "orbitron", version)]
struct Args {
    command: Command,
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, env = "ORBITRON_OUT_DIR", default_value = "out")]
    out: PathBuf,
    /// Overrides the Monte Carlo seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for parallel trials (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn run(args: &Args) -> Result<Option<String>, CliError> {
    let cfg = RunConfig::load(&args.config)?;
    let opts = RunOptions { seed: args.seed };
    let output = match args.threads {
        Some(0) => return Err(CliError::validation("--threads must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Io(format!("thread pool: {e}")))?
            .install(|| run_command(args.command, &cfg, &opts))?,
        None => run_command(args.command, &cfg, &opts)?,
    };
    write_outputs(&output, &args.out)?;
    println!("{}", output.summary);
    Ok(output.fault)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(fault)) => {
            eprintln!("orbitron: numerical fault: {fault} (partial output written)");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("orbitron: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
