use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dqvi_sim::{compare, load_config, run, IntegratorKind, Overrides, SimError, Trajectory};
use rayon::prelude::*;

/// Simulate a rigid body with the dual quaternion variational integrator.
///
/// Exit status: 0 ok, 2 configuration error, 3 solver divergence, 4 I/O error.
#[derive(Parser)]
#[command(version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Compare trajectory tables against a reference table.
    Compare {
        /// Reference table, sampled at least as finely as the others.
        reference: PathBuf,
        /// Tables to compare, e.g. runs at decreasing step sizes.
        #[arg(required = true)]
        trajectories: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file; repeat to run a batch.
    #[arg(long, required = true)]
    config: Vec<PathBuf>,
    /// Output table (single scenario only).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Time step in seconds.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Newton residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, value_enum)]
    integrator: Option<IntegratorKind>,
    /// Write every n-th step.
    #[arg(long)]
    stride: Option<usize>,
    /// Scenarios run concurrently in batch mode.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

/// Runs every scenario, reporting each failure; returns the most severe one.
fn run_all(args: &RunArgs) -> Result<(), SimError> {
    if args.output.is_some() && args.config.len() > 1 {
        return Err(SimError::config("--output needs a single --config"));
    }
    if args.jobs == 0 {
        return Err(SimError::config("--jobs must be at least 1"));
    }
    let overrides = Overrides {
        output: args.output.clone(),
        h: args.h,
        steps: args.steps,
        tolerance: args.tol,
        max_iterations: args.max_iter,
        integrator: args.integrator,
        stride: args.stride,
    };
    let one = |path: &PathBuf| load_config(path, &overrides).and_then(|c| run(&c).map(|s| (c, s)));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| SimError::config(e.to_string()))?;
    let results: Vec<_> = pool.install(|| args.config.par_iter().map(one).collect());

    let mut worst: Option<SimError> = None;
    for (path, result) in args.config.iter().zip(results) {
        match result {
            Ok((config, summary)) => {
                println!("{} -> {}", path.display(), config.output.path.display());
                println!("{summary}");
            }
            Err(e) => match &worst {
                Some(w) if w.exit_code() >= e.exit_code() => eprintln!("error: {e}"),
                _ => {
                    if let Some(w) = worst.replace(e) {
                        eprintln!("error: {w}");
                    }
                }
            },
        }
    }
    worst.map_or(Ok(()), Err)
}

fn compare_all(reference: &PathBuf, trajectories: &[PathBuf]) -> Result<(), SimError> {
    let reference = Trajectory::read(reference)?;
    let mut previous: Option<f64> = None;
    for path in trajectories {
        let c = compare(&Trajectory::read(path)?, &reference)?;
        let ratio = previous.map(|p| format!("  ratio {:.3}", p / c.final_pose)).unwrap_or_default();
        println!("{}: {c}{ratio}", path.display());
        previous = Some(c.final_pose);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Some(Command::Compare { reference, trajectories }) => compare_all(reference, trajectories),
        None => run_all(&cli.run),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
