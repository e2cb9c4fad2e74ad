use thiserror::Error;

/// Errors raised while loading or validating a scenario file.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

impl ConfigError {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl From<serde_json::Error> for ConfigError {
    fn from(err: serde_json::Error) -> Self {
        ConfigError::Parse {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("path loss undefined below the reference distance ({distance} m < {reference} m)")]
    PathLossDomain { distance: f64, reference: f64 },

    #[error("quadrature did not converge: achieved relative error {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{bits} bits is outside the constellation domain {{0}} U [2, {max_bits}]")]
    BitsOutOfDomain { bits: u32, max_bits: u32 },

    #[error("cap incompatible with active set (denominator {denominator:e})")]
    CapIncompatible { denominator: f64 },

    #[error("multiplier search did not converge, residuals {residual:?}")]
    RootFinding { residual: Vec<f64> },

    #[error("active-set iteration exceeded {rounds} rounds")]
    ActiveSetIteration { rounds: usize },

    #[error("exhaustive search refused: {n} subcarriers exceeds the limit of {limit}")]
    OracleTooLarge { n: usize, limit: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
