mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use gda_core::{Error, ErrorClass};

use args::{expand_config, Cli, Command};
use commands::Ctx;

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Usage => EXIT_USAGE,
        ErrorClass::Data => EXIT_DATA,
        ErrorClass::Numeric => EXIT_NUMERIC,
    }
}

fn main() -> ExitCode {
    let argv = match expand_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    // clap exits with 2 on usage errors and 0 for --help
    let cli = Cli::parse_from(argv);
    let ctx = Ctx { verbose: cli.verbose };
    let result = match &cli.command {
        Command::Train(a) => commands::train_cmd(a, &ctx),
        Command::Classify(a) => commands::classify_cmd(a, &ctx),
        Command::Evaluate(a) => commands::evaluate_cmd(a, &ctx),
        Command::Compress(a) => commands::compress_cmd(a, &ctx),
        Command::Visualize(a) => commands::visualize_cmd(a, &ctx),
        Command::Synthesize(a) => commands::synthesize_cmd(a, &ctx),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
