//! `conslaw`: browse the catalog, verify and classify conservation laws,
//! map them between kinds and check them numerically on exact solutions.

mod commands;
mod report;
mod resolve;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use report::{Echo, Report};

#[derive(Debug, Parser)]
#[command(name = "conslaw", version, about = "Conservation laws of 3-D PDE systems")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List registered systems, currents, solutions or mapping vectors.
    List {
        #[arg(value_enum)]
        what: Listing,
    },
    /// Verify that currents are conserved on solutions.
    Check(Target),
    /// Decide whether a current is trivial, with a witness or certificate.
    Classify {
        #[command(flatten)]
        target: Target,
        /// Jet order allowed in witness ansatzes.
        #[arg(long)]
        order_bound: Option<u32>,
    },
    /// Map a current to another kind with a vector field.
    Map {
        #[command(flatten)]
        target: Target,
        /// Target kind, e.g. `volumetric` or `surface-flux`.
        #[arg(long)]
        to: String,
        /// Mapping vector id (`i`, `j`, `k` or a registered vectorfield).
        #[arg(long)]
        xi: String,
        #[arg(long)]
        order_bound: Option<u32>,
    },
    /// Integrate a current over a domain on an exact solution.
    ///
    /// Extra positional tokens may name the solution, the domain and the
    /// time as `t=VALUE`.
    Numcheck {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        solution: Option<String>,
        /// Domain, e.g. `box:0,0,0,1,1,1`, `boxboundary`, `circle:r=2`.
        #[arg(long)]
        domain: Option<String>,
        #[arg(long)]
        time: Option<f64>,
        /// Gauss-Legendre points per axis at the coarsest level.
        #[arg(long, default_value_t = 8)]
        quad: usize,
        /// Refinement levels; points double per level.
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value_t = 1e-6)]
        rtol: f64,
        #[arg(long, default_value_t = 1e-12)]
        atol: f64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::List { .. } => "list",
            Command::Check(_) => "check",
            Command::Classify { .. } => "classify",
            Command::Map { .. } => "map",
            Command::Numcheck { .. } => "numcheck",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Listing {
    Systems,
    Currents,
    Solutions,
    Vectorfields,
}

/// Which system and current a command acts on.
#[derive(Debug, Clone, Args)]
pub struct Target {
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    current: Option<String>,
    /// Read extra definitions from a `.claw` file.
    #[arg(long)]
    file: Option<std::path::PathBuf>,
    /// System, current and command-specific ids in order.
    #[arg(value_name = "ID")]
    positional: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let echo = Echo {
        name: cli.command.name().to_string(),
        args: std::env::args().skip(1).collect(),
    };
    let report = match commands::run(&cli.command, echo.clone()) {
        Ok(r) => r,
        Err(e) => Report::failure(echo, e.exit_code(), e.to_string()),
    };
    report.emit(cli.format);
    ExitCode::from(report.exit_status as u8)
}
