use std::process::ExitCode;

use blockmt_cli::args::Cli;
use blockmt_cli::error::Status;
use clap::Parser;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                Status::ParameterError.into()
            } else {
                Status::Ok.into()
            };
        }
    };
    match blockmt_cli::run(&cli) {
        Ok(()) => Status::Ok.into(),
        Err(e) => {
            eprintln!("error: {e}");
            e.status.into()
        }
    }
}
