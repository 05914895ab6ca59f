mod commands;
mod config;
mod error;
mod output;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use reproduce::Figure;

/// Rotating waves of reaction-diffusion systems: conditions, spectra, freezing, decay.
#[derive(Parser)]
#[command(name = "rotwave", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// TOML run configuration; see config/schema.toml.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Dotted key and TOML value, e.g. freeze.N=64. Repeatable.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the structural conditions for each configured p.
    Check,
    /// Symmetry set and eigentriples of model.S.
    Symmetry,
    /// Dispersion curves, tips and density verdict.
    Dispersion,
    /// Run the freezing method to a rotating wave.
    Freeze,
    /// Shift-invert eigenvalues of the linearization at a frozen profile.
    Eigs,
    /// Fit the radial decay of a field and compare with the bounds.
    Decay,
    /// Emit the dataset behind a figure.
    Reproduce { figure: Figure },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = config::load(cli.config.as_deref(), &cli.overrides, cli.seed, cli.out.as_deref()).and_then(|cfg| match cli.cmd {
        Cmd::Check => commands::check(&cfg),
        Cmd::Symmetry => commands::symmetry(&cfg),
        Cmd::Dispersion => commands::dispersion(&cfg),
        Cmd::Freeze => commands::freeze(&cfg),
        Cmd::Eigs => commands::eigs(&cfg),
        Cmd::Decay => commands::decay(&cfg),
        Cmd::Reproduce { figure } => reproduce::run(&cfg, figure),
    });
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
