use std::process::ExitCode;

use clap::Parser;
use depdec_cli::app::{run, Cli};

fn main() -> ExitCode {
    ExitCode::from(run(&Cli::parse()))
}
