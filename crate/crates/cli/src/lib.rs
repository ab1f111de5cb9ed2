//! Library side of the `blockmt` command-line tool.

pub mod args;
pub mod checks;
pub mod commands;
pub mod error;
pub mod format;
pub mod input;
pub mod simulate;

use args::{Cli, Command};
use error::CliResult;

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Test(a) => commands::cmd_test(&cli.global, a),
        Command::Simulate(a) => simulate::cmd_simulate(&cli.global, a),
        Command::Verify(a) => commands::cmd_verify(&cli.global, a),
        Command::Threshold(a) => commands::cmd_threshold(&cli.global, a),
    }
}
