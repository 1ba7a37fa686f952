use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod error;
mod io;
mod settings;

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    match commands::run(cli) {
        Ok(text) => {
            let mut stdout = std::io::stdout().lock();
            // A closed pipe is not an error worth reporting.
            let _ = stdout.write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("cpkit: error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
