mod cli;
mod commands;
mod config;
mod error;

use clap::{CommandFactory, Parser};
use cli::{Cli, SUBCOMMANDS};
use error::CliError;

fn run() -> Result<(), CliError> {
    let command = Cli::command();
    let accepts = |sub: &str, key: &str| {
        let has = |c: &clap::Command| c.get_arguments().any(|a| a.get_long() == Some(key));
        has(&command) || command.find_subcommand(sub).is_some_and(has)
    };
    let args = config::inject_config(std::env::args_os().collect(), SUBCOMMANDS, accepts)?;
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::input("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    commands::dispatch(&cli.command)
}

fn main() {
    if let Err(e) = run() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
