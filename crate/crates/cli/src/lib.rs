//! Command-line front-end: single solves, parameter sweeps, closed-form
//! baselines, validation and Monte-Carlo checks.

pub mod args;
pub mod commands;
pub mod csv;
pub mod doc;

use std::fmt;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Usage = 1,
    Infeasible = 2,
    Unverified = 3,
    Validation = 4,
}

/// An error carrying the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: Exit,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(e: impl Into<anyhow::Error>) -> Self {
        Failure { code: Exit::Usage, error: e.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl From<swipt_core::Error> for Failure {
    fn from(e: swipt_core::Error) -> Self {
        let code = match e {
            swipt_core::Error::Infeasible { .. } => Exit::Infeasible,
            _ => Exit::Usage,
        };
        Failure { code, error: e.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::usage(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::usage(e)
    }
}

pub fn run(cli: args::Cli) -> Result<Exit, Failure> {
    use args::Command;
    match cli.command {
        Command::Solve(a) => commands::solve::run(a),
        Command::Sweep(a) => commands::sweep::run(a),
        Command::Baseline(a) => commands::baseline::run(a),
        Command::Validate(a) => commands::validate::run(a),
        Command::Mc(a) => commands::mc::run(a),
    }
}
