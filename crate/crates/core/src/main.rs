use std::process::ExitCode;

use clap::Parser;
use fountain_lab::cli::{dispatch, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fountain-lab: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
