use std::process::ExitCode;

use clap::Parser;
use morph_core::cli::{self, Cli};

fn main() -> ExitCode {
    match cli::run(Cli::parse()) {
        Ok(outcome) => {
            print!("{}", outcome.report);
            if outcome.failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("morph: {e}");
            ExitCode::from(2)
        }
    }
}
