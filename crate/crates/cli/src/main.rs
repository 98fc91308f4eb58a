mod bench;
mod cli;
mod commands;
mod error;
mod formats;

use std::process::ExitCode;

use clap::Parser;

use crate::cli::{Cli, Command};
use crate::commands::Globals;
use crate::error::EXIT_USAGE;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let g = Globals {
        seed: cli.seed,
        output: cli.output.clone(),
        format: cli.format,
        quiet: cli.quiet,
    };
    let result = match &cli.command {
        Command::Synth(a) => commands::synth(a, &g),
        Command::Align(a) => commands::align(a, &g),
        Command::Smi(a) => commands::smi(a, &g),
        Command::Eval(a) => commands::eval(a, &g),
        Command::Bench(a) => bench::bench(a, &g),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
