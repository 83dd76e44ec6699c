use thiserror::Error;

/// Failures raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("series are centered at different points ({0} vs {1})")]
    BasePointMismatch(String, String),
    #[error("cannot invert a series whose lowest coefficient vanishes")]
    ZeroInversion,
    #[error("series truncation too low: need order {needed}, have {have}")]
    Truncation { needed: i32, have: i32 },
    #[error("odd branch coefficient {coeff:e} at s^{exponent} survives residue extraction")]
    BranchParity { exponent: i32, coeff: f64 },
    #[error("zero polynomial has no roots")]
    ZeroPolynomial,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("point is not semisimple (min critical value gap {gap:e})")]
    NotSemisimple { gap: f64 },
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("verification residual {residual:e} exceeds tolerance {tol:e} in {what}")]
    Residual { what: String, residual: f64, tol: f64 },
    #[error("correlator dependency missing: genus {g}, {n} insertions")]
    MissingDependency { g: usize, n: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
