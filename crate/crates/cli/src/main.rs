mod cli;
mod commands;
mod complex;
mod error;
mod output;
mod scenario;

use clap::Parser;
use cli::{Cli, Command};
use error::CliError;
use log::info;
use std::process::ExitCode;

fn dispatch(cli: &Cli, command: &Command) -> Result<(), CliError> {
    let artifact = match command {
        Command::Eval(a) => commands::eval(a)?,
        Command::Flow(a) => commands::flow(a, cli.tol)?,
        Command::Hitchin(a) => commands::hitchin(a, cli.tol)?,
        Command::Monodromy(a) => commands::monodromy(a, cli.tol)?,
        Command::Convert(a) => commands::convert(a)?,
        Command::Collapse(a) => commands::collapse(a, cli.tol)?,
        Command::Verify(a) => commands::verify(a)?,
    };
    for path in artifact.write(cli.format, cli.out.as_deref())? {
        info!("wrote {}", path.display());
    }
    let failed = artifact.failed_checks();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::ChecksFailed(failed))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match (&cli.config, &cli.command) {
        (Some(_), Some(_)) => Err(CliError::Invalid(
            "--config replaces the subcommand; give one or the other".into(),
        )),
        (Some(file), None) => {
            let sc = scenario::Scenario::load(file)?;
            let args = sc.to_args()?;
            info!("scenario {} expands to {:?}", file.display(), args);
            let mut from_file =
                Cli::try_parse_from(&args).map_err(|e| CliError::Invalid(e.to_string()))?;
            // Global flags on the command line take precedence over the file.
            from_file.tol = cli.tol.or(from_file.tol);
            from_file.out = cli.out.clone().or(from_file.out);
            from_file.format = cli.format.or(from_file.format);
            let command = from_file.command.take().expect("scenario names a command");
            dispatch(&from_file, &command)
        }
        (None, Some(command)) => dispatch(&cli, command),
        (None, None) => Err(CliError::Invalid(
            "a subcommand or --config is required (see isl --help)".into(),
        )),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("ISL_LOG"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
