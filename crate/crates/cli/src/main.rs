mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Failure classes and their process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Verify(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Capacity(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Verify(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Capacity(_) => 3,
        }
    }
}

impl From<pim_spmv::RunError> for CliError {
    fn from(e: pim_spmv::RunError) -> Self {
        match e {
            pim_spmv::RunError::OracleMismatch { .. } => CliError::Verify(e.to_string()),
            e if e.is_capacity() => CliError::Capacity(e.to_string()),
            e => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Info(a) => commands::info(&a),
        Command::Run(a) => commands::run(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::ListKernels(a) => commands::list_kernels(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
