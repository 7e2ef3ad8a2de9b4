//! `aip` - batch solver for matrix-valued interpolation and moment
//! problems. Reads JSON problem files, prints deterministic JSON reports to
//! stdout and writes CSV samples.
//!
//! Exit codes: 0 all checks pass, 1 verification failures, 2 input errors.

mod commands;
mod reportfile;
mod schema;

use clap::{Parser, Subcommand};
use commands::InputError;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "aip", version, about = "Nevanlinna interpolation and moment problem solver")]
struct Cli {
    /// Absolute tolerance override for all checks
    #[arg(long, global = true)]
    tol_abs: Option<f64>,
    /// Relative tolerance override for all checks
    #[arg(long, global = true)]
    tol_rel: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a problem file: structure identity, positivity, splitting,
    /// solvability
    Validate { file: PathBuf },
    /// Solve with one parameter and emit a report plus CSV samples over the
    /// grid
    Solve {
        file: PathBuf,
        /// Index into the file's parameter list
        #[arg(long)]
        param: usize,
        /// Grid override: "re,im;re,im;..."
        #[arg(long)]
        grid: Option<String>,
        /// CSV output path (defaults to <stem>.solve<k>.csv)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full verification battery over every parameter in the file
    Verify { file: PathBuf },
    /// Compare the transform-based solutions against the direct
    /// selfadjoint-extension solver (constant parameters only)
    OracleCheck { file: PathBuf },
    /// Sample a solution (and optionally the resolvent matrix) along a
    /// segment: imag:<rmin>:<rmax>:<count> or line:<re,im>:<re,im>:<count>
    Sample {
        file: PathBuf,
        #[arg(long)]
        segment: String,
        #[arg(long, default_value_t = 0)]
        param: usize,
        /// Include resolvent-matrix entries in the CSV
        #[arg(long)]
        theta: bool,
        /// CSV output path (defaults to stdout)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_grid(spec: &str) -> Result<Vec<aip_core::matkit::C64>, InputError> {
    spec.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let parts: Vec<&str> = s.split(',').collect();
            if parts.len() != 2 {
                return Err(InputError(format!("bad grid point {s:?}; expected re,im")));
            }
            let re: f64 = parts[0].trim().parse().map_err(|_| InputError("bad re".into()))?;
            let im: f64 = parts[1].trim().parse().map_err(|_| InputError("bad im".into()))?;
            Ok(aip_core::matkit::c(re, im))
        })
        .collect()
}

fn run(cli: Cli) -> Result<(String, bool), InputError> {
    match &cli.command {
        Command::Validate { file } => {
            let pf = commands::read_problem(file, cli.tol_abs, cli.tol_rel)?;
            commands::cmd_validate(&pf)
        }
        Command::Solve { file, param, grid, out } => {
            let pf = commands::read_problem(file, cli.tol_abs, cli.tol_rel)?;
            let grid = grid.as_deref().map(parse_grid).transpose()?;
            commands::cmd_solve(&pf, *param, grid, out.clone(), file)
        }
        Command::Verify { file } => {
            let pf = commands::read_problem(file, cli.tol_abs, cli.tol_rel)?;
            commands::cmd_verify(&pf)
        }
        Command::OracleCheck { file } => {
            let pf = commands::read_problem(file, cli.tol_abs, cli.tol_rel)?;
            commands::cmd_oracle_check(&pf)
        }
        Command::Sample { file, segment, param, theta, out } => {
            let pf = commands::read_problem(file, cli.tol_abs, cli.tol_rel)?;
            commands::cmd_sample(&pf, segment, *param, *theta, out.clone())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok((text, passed)) => {
            if text.ends_with('\n') {
                print!("{text}");
            } else {
                println!("{text}");
            }
            std::process::exit(if passed { 0 } else { 1 });
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}
