//! `piezoleg`: scaling reports, transmission characterization, locomotion runs,
//! sweeps, payload studies and sensing round trips, written as CSV (and SVG).

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("{0}")]
    Divergence(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Divergence(_) => 4,
        }
    }
}

impl From<piezoleg_core::Error> for CliError {
    fn from(e: piezoleg_core::Error) -> Self {
        use piezoleg_core::Error as E;
        match e {
            E::Divergence { .. } => CliError::Divergence(e.to_string()),
            E::Io(m) => CliError::Io(m),
            other => CliError::Config(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "piezoleg", version, about = "Scaling and locomotion experiments for piezo-driven legged microrobots")]
pub struct Cli {
    /// Experiment configuration (TOML); every section is optional.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; overrides `[output] dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    plots: bool,
    /// Robot preset; overrides the `[robot]` section.
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    /// Worker threads for sweeps (0 = all cores).
    #[arg(long, global = true, value_name = "N")]
    parallel: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Scaling report of a base robot under an allometric transform.
    Scale,
    /// Vertical stiffness curve and lift/swing frequency responses.
    Characterize,
    /// One locomotion run: trajectory and summary.
    Run,
    /// Gait × frequency × repetition sweep.
    Sweep,
    /// Speed and cost of transport against added mass.
    Payload,
    /// Reconstruct foot motion from actuator currents.
    Sense,
    /// Relative leg stiffness and reference locomotion figures.
    Report,
    /// Embedded robot presets.
    Preset {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Debug, Subcommand)]
enum PresetAction {
    /// List preset names.
    List,
    /// Print a preset as a `[robot.spec]` config section.
    Show { name: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("piezoleg: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    if let Command::Preset { action } = &cli.command {
        return match action {
            PresetAction::List => commands::preset_list(),
            PresetAction::Show { name } => commands::preset_show(name),
        };
    }
    let ctx = commands::Context::load(cli.config.as_deref(), cli.out.clone(), cli.plots, cli.preset.clone(), cli.parallel)?;
    match cli.command {
        Command::Scale => commands::scale(&ctx),
        Command::Characterize => commands::characterize(&ctx),
        Command::Run => commands::run(&ctx),
        Command::Sweep => commands::sweep(&ctx),
        Command::Payload => commands::payload(&ctx),
        Command::Sense => commands::sense(&ctx),
        Command::Report => commands::report(&ctx),
        Command::Preset { .. } => unreachable!("handled above"),
    }
}
