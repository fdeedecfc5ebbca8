//! Command-line front end: argument types, range parsing and the three
//! subcommands. `main.rs` only wires these to stdout and the exit status.

pub mod args;
pub mod commands;
pub mod values;

pub use commands::{cmd_rate, cmd_simulate, cmd_verify, CliError, Outcome};

use args::{Cli, Command};

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Rate(a) => cmd_rate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

pub fn output_path(cli: &Cli) -> Option<&std::path::Path> {
    match &cli.command {
        Command::Rate(a) => a.output.out.as_deref(),
        Command::Simulate(a) => a.output.out.as_deref(),
        Command::Verify(a) => a.output.out.as_deref(),
    }
}
