use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which side of the admissible density range a value fell off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainBound {
    /// `c <= 0`.
    NonPositiveDensity,
    /// `beta * c` reached the covolume singularity.
    CovolumeLimit,
    /// Argument of a square root or logarithm left its domain.
    Argument,
    /// Outside of `(0, 1)` for a dimensionless packing fraction.
    PackingFraction,
}

impl std::fmt::Display for DomainBound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DomainBound::NonPositiveDensity => "c > 0",
            DomainBound::CovolumeLimit => "beta*c < 1",
            DomainBound::Argument => "function argument in domain",
            DomainBound::PackingFraction => "0 < epsilon_0 < 1",
        };
        f.write_str(s)
    }
}

/// Coarse error classes, mapped one-to-one onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Domain,
    Solver,
    Invariant,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 2,
            ErrorCategory::Domain => 3,
            ErrorCategory::Solver => 4,
            ErrorCategory::Invariant => 5,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("density {value} violates {bound}")]
    Domain { bound: DomainBound, value: f64 },

    #[error("density {value} at cell {cell} violates {bound}")]
    CellDomain {
        cell: usize,
        bound: DomainBound,
        value: f64,
    },

    #[error("cell {cell} holds {value}, outside the density window [{lower}, {upper}]")]
    BoundsViolation {
        cell: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error(
        "conjugate gradient stalled after {iterations} iterations (relative residual {residual:e})"
    )]
    ConvergenceFailure {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("invariant violated at step {step}: {what}")]
    Invariant { step: usize, what: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidParameter { .. }
            | Error::Parse { .. }
            | Error::Config { .. }
            | Error::Io { .. } => ErrorCategory::Config,
            Error::Domain { .. }
            | Error::CellDomain { .. }
            | Error::BoundsViolation { .. }
            | Error::ShapeMismatch { .. } => ErrorCategory::Domain,
            Error::ConvergenceFailure { .. } => ErrorCategory::Solver,
            Error::Invariant { .. } => ErrorCategory::Invariant,
        }
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attaches a cell index to a scalar domain error.
    pub(crate) fn at_cell(self, cell: usize) -> Self {
        match self {
            Error::Domain { bound, value } => Error::CellDomain { cell, bound, value },
            other => other,
        }
    }
}
