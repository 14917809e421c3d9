mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::Parser;

use config::{Cli, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Data(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<amvp_core::Error> for CliError {
    fn from(e: amvp_core::Error) -> Self {
        let msg = e.to_string();
        if e.is_data_error() {
            CliError::Data(msg)
        } else if matches!(e, amvp_core::Error::InvalidParameter(_)) {
            CliError::Config(msg)
        } else {
            CliError::Numerical(msg)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let rendered = e.to_string();
            let line = rendered.lines().next().unwrap_or("invalid arguments");
            eprintln!("amvp-lab: {}", line.trim_start_matches("error: "));
            return ExitCode::from(1);
        }
    };
    let result = RunConfig::resolve(cli.command.flags()).and_then(|cfg| commands::run(&cli.command, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("amvp-lab: {}", e.message().replace('\n', " "));
            ExitCode::from(e.code())
        }
    }
}
