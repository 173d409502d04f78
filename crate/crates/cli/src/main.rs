use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stiefel_cli::commands::{self, load_config, render_critical, CliError};
use stiefel_cli::config::{Overrides, SolverName, StepRule};
use stiefel_cli::report::to_json;

/// Riemannian steepest descent on Stiefel manifolds.
#[derive(Debug, Parser)]
#[command(name = "stiefel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Maximum number of descent iterations.
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    /// Stop once the gradient norm is at most this.
    #[arg(long, global = true)]
    grad_tol: Option<f64>,
    /// Step rule: `armijo` or `fixed:<step>`.
    #[arg(long, global = true)]
    step: Option<StepRule>,
    /// Linear solver for the skew update.
    #[arg(long, global = true, value_enum)]
    solver: Option<SolverName>,
    /// Write the iteration trace (CSV) here.
    #[arg(long, global = true)]
    trace: Option<PathBuf>,
    /// Seed for random starting points and gradient checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the descent described by a config file and print a JSON report.
    Run { config: PathBuf },
    /// Compare the analytic gradient with central differences.
    Gradcheck { config: PathBuf },
    /// Re-run the built-in Brockett experiments and compare the limits.
    #[command(alias = "paper-tables")]
    ReferenceTables,
    /// List the critical points of a diagonal Brockett problem.
    EnumerateCritical { config: PathBuf },
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            step: self.step,
            solver: self.solver,
            trace: self.trace.clone(),
            seed: self.seed,
        }
    }
}

fn status(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn execute(cli: &Cli) -> Result<ExitCode, CliError> {
    let overrides = cli.overrides();
    match &cli.command {
        Command::Run { config } => {
            let config = load_config(config, &overrides)?;
            let run = commands::run_experiment(&config)?;
            print!("{}", to_json(&run.report));
            Ok(status(run.report.converged))
        }
        Command::Gradcheck { config } => {
            let config = load_config(config, &overrides)?;
            let report = commands::gradcheck(&config)?;
            print!("{}", to_json(&report));
            Ok(status(report.passed))
        }
        Command::ReferenceTables => {
            let tables = commands::reproduce_reference_tables(&overrides)?;
            print!("{}", tables.render());
            Ok(status(tables.all_match()))
        }
        Command::EnumerateCritical { config } => {
            let config = load_config(config, &overrides)?;
            let points = commands::enumerate_critical(&config)?;
            print!("{}", render_critical(&points));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
