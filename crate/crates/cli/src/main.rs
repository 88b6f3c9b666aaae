#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

mod commands;
mod config;
mod io;

use commands::Cli;

/// Exit codes: 0 success, 1 soft criterion warning, 2 usage, 3 invalid
/// configuration, 4 hard criterion failure or runtime error.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<bbmlab::Error>() {
            Some(bbmlab::Error::InvalidParameter { .. }) | Some(bbmlab::Error::Domain(_)) => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e),
        }
    }
}

impl From<bbmlab::Error> for CliError {
    fn from(e: bbmlab::Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

pub fn out_dir(out: &Option<PathBuf>) -> PathBuf {
    out.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn main() -> ExitCode {
    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    match commands::dispatch(cli, &matches) {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Config(msg)) => {
            eprintln!("invalid configuration: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(4)
        }
    }
}
