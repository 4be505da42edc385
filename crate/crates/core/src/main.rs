use std::process::ExitCode;

use clap::Parser;
use covertslot_core::cli::{self, Cli};

fn main() -> ExitCode {
    let args = Cli::parse();
    let result = cli::init_threads().and_then(|()| cli::run(&args));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
