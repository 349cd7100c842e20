use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    Domain(String),
    /// Adaptive quadrature hit its panel budget before reaching tolerance.
    Quadrature {
        value: f64,
        error_estimate: f64,
        panels: usize,
    },
    /// The constraint set is empty. `bound` is the largest attainable value
    /// of the violated functional.
    Infeasible { constraint: &'static str, requested: f64, bound: f64 },
    /// The time-sharing tail index is too small to reach the delivered-power
    /// floor; `min_l` is the smallest index that does.
    TailIndexTooSmall { l: u64, min_l: u64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Quadrature { value, error_estimate, panels } => write!(
                f,
                "quadrature did not converge: value {value:e}, error estimate {error_estimate:e} after {panels} panels"
            ),
            Error::Infeasible { constraint, requested, bound } => write!(
                f,
                "infeasible {constraint} constraint: requested {requested}, attainable maximum {bound}"
            ),
            Error::TailIndexTooSmall { l, min_l } => write!(
                f,
                "tail index l = {l} cannot reach the delivered-power floor; increase l to at least {min_l}"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
