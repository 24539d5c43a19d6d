use thiserror::Error;

/// Errors raised by the numerical modules and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A point or parameter lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A precondition of the operation does not hold for the given inputs.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The operation was called on an object that does not satisfy its contract
    /// (for example centering a determinant of a non-even potential).
    #[error("contract violated: {0}")]
    Contract(String),

    /// A size limit (degree cap, grid size) was exceeded.
    #[error("size limit exceeded: {0}")]
    Size(String),

    /// An iterative method failed to converge.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// The effective Lyapunov exponent is not affine on the requested window.
    #[error("non-affine window [{lo}, {hi}]: slope {slope:.6} has residual {residual:.3}")]
    NonAffineWindow { lo: f64, hi: f64, slope: f64, residual: f64 },

    /// A zero of the determinant sits on a circle that must be zero-free.
    #[error("zero {re:+.12e}{im:+.12e}i lies on the circle |z| = {radius:.12}")]
    BoundaryZero { re: f64, im: f64, radius: f64 },

    /// Configuration or command-line validation failure.
    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by the inputs rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Validation(_) | Error::Domain(_) | Error::Json(_) | Error::Contract(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
