mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use crate::commands::CmdError;
use crate::config::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
