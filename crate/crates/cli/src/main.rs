use std::io::{self, Write};
use std::path::PathBuf;
use std::process;

use caputo_picard_cli::{commands, run_check, run_depend, run_family, run_mlf, run_selftest, run_solve, ExitCode};
use clap::{Parser, Subcommand};

/// Environment variable capping the worker thread count.
const THREADS_ENV: &str = "CAPUTO_PICARD_THREADS";

#[derive(Parser)]
#[command(name = "caputo-picard", version, about = "Picard solver for implicit Caputo fractional differential equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the contraction constants of a problem
    Check { config: PathBuf },
    /// Solve a problem and write the solution as CSV
    Solve {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare two problems against the data-dependence bound
    Depend { config: PathBuf },
    /// Solve an anchored family and report distances between members
    Family {
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Evaluate the Mittag-Leffler function E_alpha(z)
    Mlf {
        alpha: f64,
        #[arg(allow_negative_numbers = true)]
        z: f64,
    },
    /// Validate the built-in fixtures
    Selftest,
}

fn main() {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                caputo_picard::set_thread_limit(n);
            }
            _ => {
                eprintln!("error: {THREADS_ENV} must be a positive integer, got {v:?}");
                process::exit(ExitCode::Config.code());
            }
        }
    }

    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = match &cli.command {
        Command::Check { config } => run_check(config, &mut out),
        Command::Solve { config, out: csv } => run_solve(config, csv, &mut out),
        Command::Depend { config } => run_depend(config, &mut out),
        Command::Family { config, out_dir } => run_family(config, out_dir, &mut out),
        Command::Mlf { alpha, z } => run_mlf(*alpha, *z, &mut out),
        Command::Selftest => run_selftest(&mut out),
    };
    let _ = out.flush();
    let code = match result {
        Ok(code) => code,
        Err(commands::CliError { code, message }) => {
            eprintln!("error: {message}");
            code
        }
    };
    process::exit(code.code());
}
