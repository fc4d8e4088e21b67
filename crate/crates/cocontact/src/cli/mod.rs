//! Command-line front end: `cocontact derive | simulate | check`.
//!
//! A system is declared in a TOML file with sections `[system]`,
//! `[parameters]`, `[externals]`, `[constraints]`, `[integrator]`, and
//! `[output]`; the builtin names `oscillator`, `kepler`, and `pendulum`
//! stand in for a path. `derive` prints the symbolic derivation of the
//! evolution field, `simulate` integrates it and writes a trajectory
//! table with diagnostics, `check` verifies the declared structure and
//! classifies requested submanifolds.

pub mod builtin;
pub mod config;
pub mod output;
pub mod run;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "cocontact",
    version,
    about = "Symbolic derivation and simulation of time-dependent dissipative systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the symbolic derivation of the evolution field.
    Derive(RunArgs),
    /// Integrate the derived field and write a trajectory table.
    Simulate(RunArgs),
    /// Verify the declared structure and classify submanifolds.
    Check(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to a TOML system definition, or a builtin name
    /// (oscillator, kepler, pendulum).
    config: String,
    /// Directory for written files; defaults to the current directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the `gamma` parameter.
    #[arg(long)]
    gamma: Option<f64>,
    /// Simulate a range of one parameter, for example `gamma=0.1:0.9:0.1`.
    #[arg(long)]
    sweep: Option<String>,
    /// Also write a gnuplot script next to the trajectory table.
    #[arg(long)]
    plots: bool,
}

pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match cli.command {
        Command::Derive(a) => {
            if let Some(code) = reject_simulate_flags("derive", &a) {
                return code;
            }
            run::run_derive(&a.config, a.gamma, a.out.as_deref())
        }
        Command::Simulate(a) => run::run_simulate(
            &a.config,
            a.gamma,
            a.sweep.as_deref(),
            a.out.as_deref(),
            a.plots,
        ),
        Command::Check(a) => {
            if let Some(code) = reject_simulate_flags("check", &a) {
                return code;
            }
            run::run_check(&a.config, a.gamma, a.out.as_deref())
        }
    }
}

fn reject_simulate_flags(command: &str, a: &RunArgs) -> Option<i32> {
    for (given, flag) in [(a.sweep.is_some(), "--sweep"), (a.plots, "--plots")] {
        if given {
            eprintln!("error: {flag} only applies to simulate, not {command}");
            return Some(2);
        }
    }
    None
}
