use thiserror::Error;

/// Errors produced by the analytics, the simulator and the sweep front end.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural parameter (order, length, sampling interval, ...) is invalid.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A numerical procedure failed to meet its accuracy contract.
    #[error("no convergence: {0}")]
    NonConvergence(String),

    /// A computed probability fell outside [0, 1] by more than rounding.
    #[error("internal consistency check failed: {0}")]
    Internal(String),

    /// A configuration file could not be accepted.
    #[error("{}", config_message(.line, .field, .message))]
    Config {
        line: Option<usize>,
        field: Option<String>,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

fn config_message(line: &Option<usize>, field: &Option<String>, message: &str) -> String {
    let mut out = String::from("config");
    if let Some(line) = line {
        out.push_str(&format!(" line {line}"));
    }
    if let Some(field) = field {
        out.push_str(&format!(" field `{field}`"));
    }
    out.push_str(": ");
    out.push_str(message);
    out
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
