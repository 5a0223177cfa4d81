use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use gatedvol::io::{run_command, Command, RunConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Fit,
    Forecast,
    Backtest,
    Simulate,
    Decompose,
    Diagnose,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Fit => Command::Fit,
            Cmd::Forecast => Command::Forecast,
            Cmd::Backtest => Command::Backtest,
            Cmd::Simulate => Command::Simulate,
            Cmd::Decompose => Command::Decompose,
            Cmd::Diagnose => Command::Diagnose,
        }
    }
}

/// Gated volatility models: fitting, forecasting, backtesting and diagnostics.
///
/// GATEDVOL_THREADS caps the worker threads. Exit codes: 0 ok, 1 usage,
/// 2 data error, 3 numerical failure.
#[derive(Debug, Parser)]
#[command(name = "gatedvol", version)]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,
    /// Run configuration (key = value lines).
    #[arg(long)]
    config: PathBuf,
    /// Overrides run.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides run.out.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Restricts (or adds) models by name or family.
    #[arg(long, num_args = 1..)]
    model: Vec<String>,
}

fn threads() -> Result<Option<usize>, String> {
    match std::env::var("GATEDVOL_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("GATEDVOL_THREADS must be a positive integer, got '{v}'")),
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match threads() {
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        }
        Ok(None) => {}
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    }
    let run = || -> gatedvol::Result<gatedvol::io::Manifest> {
        let mut cfg = RunConfig::from_file(&cli.config)?;
        if let Some(s) = cli.seed {
            cfg.seed = s;
        }
        cfg.select_models(&cli.model)?;
        let out = cli.out.clone().unwrap_or_else(|| cfg.resolve(&cfg.out));
        run_command(&cfg, cli.command.into(), &out)
    };
    match run() {
        Ok(m) => {
            println!("{}: {} artifacts, config {}", m.command, m.artifacts.len() + 1, &m.config_hash[..12]);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
