mod args;
mod commands;

use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};
use serde::Serialize;

use args::Cli;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] orthoproj::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Lib(e) => e.kind(),
            CliError::Usage(_) => "usage",
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: ErrorBody<'a>,
}

fn report(kind: &str, message: String) -> ExitCode {
    let body = ErrorReport {
        error: ErrorBody { kind, message },
    };
    eprintln!("{}", serde_json::to_string(&body).expect("error report serializes"));
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let version: &'static str = Box::leak(
        format!(
            "{} (library {}, format {})",
            env!("CARGO_PKG_VERSION"),
            orthoproj::VERSION,
            orthoproj::FORMAT_VERSION
        )
        .into_boxed_str(),
    );
    let matches = match Cli::command().version(version).try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            return report("usage", e.to_string().trim_end().to_string());
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => return report("usage", e.to_string()),
    };
    match commands::run(cli.command) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            let mut message = e.to_string();
            if e.kind() == "distinct-points-required" {
                message.push_str("; pass --dedup to drop repeated rows");
            }
            report(e.kind(), message)
        }
    }
}
