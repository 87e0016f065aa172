//! `affecton` command-line tool.

mod args;
mod commands;
mod paths;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use paths::Paths;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let paths = Paths::new(cli.data_dir.clone());
    let result = match &cli.command {
        Command::Train(a) => commands::train(&paths, a),
        Command::Generate(a) => commands::generate(&paths, a),
        Command::Map(a) => commands::map(&paths, a),
        Command::Eval(a) => commands::eval(&paths, a),
        Command::Select(a) => commands::select(&paths, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
