//! Error type shared across the crate.

use alloc::string::String;
use core::fmt;

/// Failures surfaced by the numeric kernels and learners.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A polynomial degree exceeds the supported cap.
    DegreeTooLarge { requested: usize, cap: usize },
    /// A basis or matrix dimension exceeds the configured limit.
    SizeLimit { what: &'static str, requested: usize, cap: usize },
    /// No samples fall inside the requested band.
    EmptyBand,
    /// An update direction is not orthogonal to the current iterate.
    NonOrthogonal { dot: f64 },
    /// A subspace with no basis vectors was supplied where one is required.
    EmptySubspace,
    /// A ratio denominator vanished beyond recovery.
    DegenerateDenominator,
    /// The wall-clock budget ran out; the carried value is the best-so-far.
    BudgetExceeded,
    /// Malformed input (bad vector length, non-unit normal, bad config).
    Invalid(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DegreeTooLarge { requested, cap } => {
                write!(f, "DegreeTooLarge: degree {requested} exceeds cap {cap}")
            }
            Error::SizeLimit { what, requested, cap } => {
                write!(f, "SizeLimit: {what} = {requested} exceeds cap {cap}")
            }
            Error::EmptyBand => write!(f, "EmptyBand: no samples inside band"),
            Error::NonOrthogonal { dot } => {
                write!(f, "NonOrthogonal: |v.w| = {dot:e} exceeds tolerance")
            }
            Error::EmptySubspace => write!(f, "EmptySubspace: subspace has dimension 0"),
            Error::DegenerateDenominator => {
                write!(f, "DegenerateDenominator: denominator below 1e-300")
            }
            Error::BudgetExceeded => write!(f, "BudgetExceeded: wall-clock budget exhausted"),
            Error::Invalid(msg) => write!(f, "Invalid: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
