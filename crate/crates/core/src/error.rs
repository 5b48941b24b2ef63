use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Argument would overflow the representable range.
    #[error("range error: {0}")]
    Range(String),

    /// Adaptive quadrature ran out of subdivisions. Carries the best estimate.
    #[error("quadrature did not converge: estimate {estimate}, error bound {error_bound:e}")]
    Convergence {
        estimate: Complex64,
        error_bound: f64,
    },

    #[error("computation cancelled")]
    Cancelled,

    /// Caller violated a documented precondition (grid shape, series length, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Nonphysical geometry such as a cylinder ray parallel to the axis.
    #[error("singular geometry: {0}")]
    SingularGeometry(String),

    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
}

pub(crate) fn ensure_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {x}")))
    }
}
