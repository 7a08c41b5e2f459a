//! Error type and exit-code mapping for the experiment runner.
//!
//! Every failure prints as a single line and maps onto a documented exit
//! code so batch scripts can branch on the reason: 2 for config problems,
//! 3 when a join would exceed the atom cap, 4 when a bounded search ran
//! out of room, 5 when no invariant-algebra description is registered for
//! the requested system/direction pair, and 1 for I/O trouble.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// The config file fails to parse, is missing a field the verb needs,
    /// or references a name that is not defined.
    Config(String),
    /// Reading the config or writing an output file failed.
    Io(String),
    /// The math kernel rejected the run.
    Core(dirmix_core::Error),
}

impl CliError {
    /// Short machine-parsable category, printed as `error[<kind>]: ...`.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Core(e) => match e {
                dirmix_core::Error::AtomCapExceeded { .. } => "atom-cap",
                dirmix_core::Error::SearchExhausted { .. } => "search-exhausted",
                dirmix_core::Error::HorizonTooSmall { .. } => "search-exhausted",
                dirmix_core::Error::UnsupportedDecomposition { .. } => "unsupported-kvn",
                _ => "config",
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "config" => 2,
            "atom-cap" => 3,
            "search-exhausted" => 4,
            "unsupported-kvn" => 5,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Io(msg) => write!(f, "{msg}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<dirmix_core::Error> for CliError {
    fn from(e: dirmix_core::Error) -> Self {
        CliError::Core(e)
    }
}
