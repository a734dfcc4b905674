use std::path::PathBuf;

/// Errors raised by the receiver model, the simulators and the CLI plumbing.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("outcome {0} lies outside the trained support")]
    UnknownOutcome(usize),

    #[error("objective returned a non-finite value ({value}) at beta = {beta}")]
    NonFiniteObjective { beta: f64, value: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("length mismatch: expected {expected} samples, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("sample period mismatch: expected {expected}, got {found}")]
    PeriodMismatch { expected: f64, found: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed trace dump: {0}")]
    TraceDump(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Checks that `value` is finite and lies in `[lo, hi]`.
pub(crate) fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<f64> {
    if !value.is_finite() {
        return Err(invalid(name, format!("must be finite, got {value}")));
    }
    if value < lo || value > hi {
        return Err(invalid(name, format!("{value} is outside [{lo}, {hi}]")));
    }
    Ok(value)
}
