//! Command-line front end: simulate degraded acquisitions, reconstruct,
//! score, render, and run benchmark grids.

mod commands;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Fourier ptychography simulation and reconstruction toolkit.
#[derive(Parser)]
#[command(name = "elfpie", version, about, max_term_width = 100)]
struct Cli {
    /// Worker thread count (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Force bit-reproducible gradient reduction regardless of the
    /// configured value.
    #[arg(long, global = true)]
    deterministic: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a degraded acquisition stack from ground-truth maps.
    Simulate(commands::SimulateArgs),
    /// Reconstruct a dataset archive.
    Reconstruct(commands::ReconstructArgs),
    /// Score a reconstruction against stored ground truth.
    Evaluate(commands::EvaluateArgs),
    /// Run a benchmark protocol and write the result table.
    Bench(commands::BenchArgs),
    /// Render a dataset frame or recovered map to a grayscale image.
    Render(commands::RenderArgs),
    /// Search photon scales that hit target dark-field corruption
    /// levels.
    CalibratePoisson(commands::CalibrateArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: could not size the thread pool: {e}");
            return ExitCode::from(1);
        }
    }

    let result = match cli.command {
        Command::Simulate(args) => commands::simulate(args),
        Command::Reconstruct(args) => commands::reconstruct(args, cli.deterministic),
        Command::Evaluate(args) => commands::evaluate(args),
        Command::Bench(args) => commands::bench(args, cli.deterministic),
        Command::Render(args) => commands::render(args),
        Command::CalibratePoisson(args) => commands::calibrate_poisson(args),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
