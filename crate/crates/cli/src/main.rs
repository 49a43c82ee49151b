//! `umpbt` command-line tool. Writes one JSON envelope per invocation to
//! standard output and diagnostics to standard error.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command, Format};
use umpbt::UmpbtError;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_UNATTAINABLE: u8 = 2;
pub const EXIT_CHECK_FAILED: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self { code: EXIT_VALIDATION, message: message.into() }
    }
}

impl From<UmpbtError> for CliError {
    fn from(e: UmpbtError) -> Self {
        let code = match e {
            UmpbtError::NoInteriorMinimum { .. } => EXIT_UNATTAINABLE,
            _ => EXIT_VALIDATION,
        };
        Self { code, message: e.to_string() }
    }
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    let outcome = match &cli.command {
        Command::Solve(a) => commands::solve(a)?,
        Command::Bf(a) => commands::bf(a)?,
        Command::Calibrate(a) => commands::calibrate(a)?,
        Command::Curve(a) => commands::curve(a, cli.format)?,
        Command::Regress(a) => commands::regress(a)?,
        Command::Check(a) => commands::check(a)?,
    };
    match (&outcome.csv, cli.format) {
        (Some((header, rows)), Format::Csv) => {
            let mut wr = csv::Writer::from_writer(std::io::stdout().lock());
            let err = |e: csv::Error| CliError::validation(format!("cannot write CSV: {e}"));
            wr.write_record(header).map_err(err)?;
            for row in rows {
                wr.write_record(row).map_err(err)?;
            }
            wr.flush().map_err(|e| CliError::validation(e.to_string()))?;
            for w in &outcome.envelope.warnings {
                eprintln!("warning: {w}");
            }
        }
        _ => output::emit(&outcome.envelope, cli.format)?,
    }
    Ok(outcome.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let line: Vec<&str> = text
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more information"))
                .filter(|l| !l.is_empty())
                .collect();
            eprintln!("umpbt: {}", line.join(" ").trim_start_matches("error: "));
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("umpbt: {}", e.message.replace('\n', " "));
            ExitCode::from(e.code)
        }
    }
}
