use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("value {value} outside domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("payoff is not monotone: the canonical form requires a monotone payoff")]
    NonMonotonePayoff,

    #[error("contract kind `{0}` has no single-statistic payoff; use the price linear form")]
    NoSingleStatisticPayoff(&'static str),

    #[error("calibration impossible: `{0}` has zero price at unit level")]
    ZeroPriceCalibration(String),

    #[error("linear program dimension mismatch: {0}")]
    Dimension(String),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("LP solver failure: {0}")]
    SolverFailure(String),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("`{0}` is not a distribution and cannot be sampled")]
    NotSampleable(String),

    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
