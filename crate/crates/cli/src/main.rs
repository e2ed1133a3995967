use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use cma_cli::{parse_config, run, Overrides, EXIT_CONFIG};

/// Complex Monge-Ampère Dirichlet solver and first-eigenvalue experiments.
#[derive(Parser, Debug)]
#[command(name = "cma", version, about)]
struct Cli {
    /// Configuration file (flat key = value)
    #[arg(long)]
    config: Option<PathBuf>,
    /// solve | eigen-continuation | eigen-inverse-power | radial | rayleigh | verify
    #[arg(long)]
    command: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run a single invariant (verify only)
    #[arg(long)]
    filter: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_CONFIG as u8);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let overrides = Overrides {
        command: cli.command,
        n: cli.n,
        h: cli.h,
        tol: cli.tol,
        seed: cli.seed,
        out: cli.out,
        filter: cli.filter,
    };
    let config = match parse_config(cli.config.as_deref(), &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let outcome = run(&config);
    print!("{}", outcome.summary.to_text());
    ExitCode::from(outcome.exit_code as u8)
}
