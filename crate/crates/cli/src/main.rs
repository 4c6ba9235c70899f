mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::Parser;

use config::{resolve, Cli, Command, GlobalArgs};
use error::{CliError, Result};

fn init_threads(global: &GlobalArgs) -> Result<()> {
    match global.threads {
        None => Ok(()),
        Some(0) => Err(CliError::Config("threads: must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("threads: {e}"))),
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let (global, command) = resolve(cli)?;
    init_threads(&global)?;
    match &command {
        Command::Gen(a) => commands::gen(&global, a),
        Command::Run(a) => commands::run(&global, a),
        Command::Spr(a) => commands::spr(&global, a),
        Command::Compact(a) => commands::compact(&global, a),
        Command::Lp(a) => commands::lp(&global, a),
        Command::Experiment(a) => commands::experiment(&global, a),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gsas: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
