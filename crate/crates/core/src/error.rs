use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("bracketing failed: {0}")]
    Bracket(String),

    #[error("precision floor reached: {0}")]
    PrecisionFloor(String),

    #[error("eigenvalue {lambda} exceeds the truncation-safe range {limit} (increase the domain margin)")]
    Truncation { lambda: f64, limit: f64 },

    #[error("solver disagreement: shooting gave {shooting}, finite differences gave {oracle}")]
    Disagreement { shooting: f64, oracle: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("Wronskian drift {error:e} exceeds tolerance {tolerance:e}")]
    Wronskian { error: f64, tolerance: f64 },

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("interval touches the Landau level {level}: bulk interval")]
    BulkInterval { level: f64 },

    #[error("empty table: nothing to write")]
    EmptyTable,

    #[error("i/o failure on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    /// Stable machine-readable tag.
    pub fn reason(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::Bracket(_) => "bracket",
            Error::PrecisionFloor(_) => "precision-floor",
            Error::Truncation { .. } => "truncation",
            Error::Disagreement { .. } => "solver-disagreement",
            Error::NonFinite(_) => "non-finite",
            Error::Wronskian { .. } => "wronskian",
            Error::Quadrature(_) => "quadrature",
            Error::BulkInterval { .. } => "bulk-interval",
            Error::EmptyTable => "empty-table",
            Error::Io { .. } => "io",
        }
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::BulkInterval { .. } | Error::EmptyTable => 2,
            Error::Disagreement { .. } => 4,
            Error::Io { .. } => 1,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn ensure_finite(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}
