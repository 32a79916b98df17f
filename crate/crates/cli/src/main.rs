//! `spinwave` command-line driver.
//!
//! Exit status: 0 success, 1 usage or configuration error, 2 validation failure,
//! 3 numerical failure (gapless parameters).

mod args;
mod config;
mod run;
mod suites;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

fn main() -> ExitCode {
    let cli = match args::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("spinwave: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
