//! Error type shared by every module.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A point lies outside the region where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The weight parameters do not describe a valid weight.
    #[error("invalid weight spec: {0}")]
    InvalidSpec(String),

    /// Bad user-supplied parameters (sample counts, grid sizes, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// The operation needs a radial weight but got a non-radial one.
    #[error("method mismatch: {0}")]
    MethodMismatch(String),

    /// Adaptive quadrature ran out of subdivisions before reaching the tolerance.
    #[error("quadrature did not converge: achieved relative error {achieved:.3e}, requested {requested:.3e}")]
    Accuracy { achieved: f64, requested: f64 },

    /// The kernel series needs more moments than the table holds.
    #[error("series truncated after {terms} terms with tail bound {tail_rel:.3e} (enlarge the moment table)")]
    Truncation { terms: usize, tail_rel: f64 },

    /// Term ratio too close to one for a usable tail bound.
    #[error("series divergence guard: term ratio {ratio:.6} is not below the guard")]
    Divergence { ratio: f64 },

    /// Gram matrix not numerically positive definite or too ill-conditioned.
    #[error("conditioning error: {0}")]
    Conditioning(String),

    /// Not enough far-field samples for a fit.
    #[error("insufficient range: {0}")]
    InsufficientRange(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit status used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) | Error::InvalidSpec(_) => 2,
            Error::Domain(_) | Error::MethodMismatch(_) => 4,
            Error::Accuracy { .. }
            | Error::Truncation { .. }
            | Error::Divergence { .. }
            | Error::Conditioning(_)
            | Error::InsufficientRange(_) => 3,
            Error::Io(_) | Error::Csv(_) => 1,
        }
    }
}
