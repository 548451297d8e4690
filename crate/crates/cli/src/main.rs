mod args;
mod commands;
mod config;
mod report;

use std::process::ExitCode;

use clap::error::ErrorKind as ClapErrorKind;
use clap::Parser;

use args::{Cli, Command};
use config::{CliError, ErrorKind};

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Track(a) => commands::track(a),
        Command::Approx(a) => commands::approx(a),
        Command::Classify(a) => commands::classify(a),
        Command::Regress(a) => commands::regress(a),
        Command::CheckBounds(a) => commands::check_bounds(a),
    }
}

fn report(kind: ErrorKind, message: &str) -> ExitCode {
    let flat = message.split_whitespace().collect::<Vec<_>>().join(" ");
    eprintln!("{}", serde_json::json!({ "error": flat, "kind": kind.name() }));
    ExitCode::from(kind.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion) => e.exit(),
        Err(e) => return report(ErrorKind::Config, &e.render().to_string()),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e.kind, &e.message),
    }
}
