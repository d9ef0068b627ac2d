use std::process::ExitCode;

use levy_omt_cli::run::EXIT_ERROR;
use levy_omt_cli::{run, RunConfig};

fn main() -> ExitCode {
    let config = match RunConfig::parse_from(std::env::args_os()) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_ERROR as u8),
            };
        }
    };
    ExitCode::from(run(&config) as u8)
}
