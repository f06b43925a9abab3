use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wronski_cli::{cmd_build, cmd_compare_gs, cmd_preset, cmd_validate, CliError, Options};

/// Build, validate and compare orthogonal systems generated by prescribed Wronskians.
#[derive(Parser)]
#[command(name = "wronski", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Directory for build artifacts
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    /// Number of interior validation points
    #[arg(long, global = true)]
    grid_points: Option<usize>,

    #[arg(long, global = true, hide = true, allow_negative_numbers = true)]
    inject_perturbation: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the system; write system.json and samples.csv
    Build { config: PathBuf },
    /// Build and check it; print the report as JSON
    Validate { config: PathBuf },
    /// Compare against Gram-Schmidt of a basis
    CompareGs { config: PathBuf },
    /// Print a built-in config (legendre, exp-seed, nonconstant-h)
    Preset { name: String },
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let opts = Options {
        out_dir: cli.out_dir,
        grid_points: cli.grid_points,
        perturbation: cli.inject_perturbation,
    };
    let mut stdout = io::stdout().lock();
    match cli.command {
        Command::Build { config } => {
            for path in cmd_build(&config, &opts)? {
                eprintln!("wrote {}", path.display());
            }
            Ok(0)
        }
        Command::Validate { config } => cmd_validate(&config, &opts, &mut stdout),
        Command::CompareGs { config } => cmd_compare_gs(&config, &opts, &mut stdout),
        Command::Preset { name } => cmd_preset(&name, &mut stdout),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
