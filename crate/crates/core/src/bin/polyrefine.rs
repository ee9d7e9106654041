use std::process::ExitCode;

use clap::Parser;
use polyrefine::cli::{run, Cli};

fn main() -> ExitCode {
    match run(&Cli::parse()) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("polyrefine: {e}");
            ExitCode::FAILURE
        }
    }
}
