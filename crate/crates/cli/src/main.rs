use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    cornerflow_cli::run(cornerflow_cli::Cli::parse())
}
