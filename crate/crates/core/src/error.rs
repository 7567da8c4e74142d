use thiserror::Error;

/// Errors raised by the estimation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A model or distribution parameter is outside its admissible domain.
    #[error("parameter out of domain: {0}")]
    Domain(String),

    /// Input data is unusable (empty series, length mismatch, bad CSV row).
    #[error("invalid input: {0}")]
    Input(String),

    /// A configuration value is inconsistent or out of range.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The second-order threshold bracket was nonpositive.
    #[error("second-order threshold undefined: bracket {bracket:.6e} <= 0; fall back to the first-order threshold")]
    ThresholdBracket { bracket: f64 },

    /// A scalar root could not be bracketed.
    #[error("no sign change on [{lo:.6e}, {hi:.6e}] (f(lo) = {f_lo:.6e}, f(hi) = {f_hi:.6e})")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    /// Monte Carlo noise is too large to resolve the requested quantity.
    #[error("Monte Carlo resolution insufficient: {0}; increase the number of paths")]
    McResolution(String),

    /// A numerical routine failed to reach its accuracy target.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The simplex optimizer could not produce a finite objective.
    #[error("optimizer failure: {message}")]
    Optimizer { message: String, trace: Vec<String> },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Input(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
