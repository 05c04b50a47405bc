use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod error;
mod evaluate;
mod run;
mod simulate;
mod unwrap;
mod visualize;

use error::{CliError, CliResult, EXIT_VALIDATION};

/// Simulate, unwrap and score AMCW iToF depth datasets.
#[derive(Debug, Parser)]
#[command(name = "itof-forge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Simulate(simulate::SimulateArgs),
    /// Correct ambiguous depth with the dual-frequency check or a prediction.
    Unwrap(unwrap::UnwrapArgs),
    /// Score corrected depth against the reference.
    Evaluate(evaluate::EvaluateArgs),
    /// Render a frame's planes side by side as an 8-bit PGM.
    Visualize(visualize::VisualizeArgs),
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("ITOF_FORGE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("ITOF_FORGE_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Simulate(a) => simulate::run(a),
        Command::Unwrap(a) => unwrap::run(a),
        Command::Evaluate(a) => evaluate::run(a),
        Command::Visualize(a) => visualize::run(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.exit_code();
            debug_assert!(code == EXIT_VALIDATION || code == error::EXIT_IO);
            ExitCode::from(code as u8)
        }
    }
}
