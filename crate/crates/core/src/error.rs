use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pole at s = {0}")]
    Pole(f64),
    #[error("quadrature did not reach tolerance: estimate {estimate:e}, error {error:e}")]
    Integration { estimate: f64, error: f64 },
    #[error("no upper bracket for the root below {0}")]
    Bracket(f64),
    #[error("degenerate Cramer-Lundberg equation: {0}")]
    Degenerate(String),
    #[error("root residual {residual:e} exceeds the gate at {location}")]
    RootResidual { location: String, residual: f64 },
    #[error("Laplace inversion routes disagree by {0:e}")]
    Inversion(f64),
    #[error("regularity: {0}")]
    Regularity(String),
    #[error("mass: {0}")]
    Mass(String),
    #[error("seam gap {gap:e} at the refraction level exceeds {bound:e}")]
    Seam { gap: f64, bound: f64 },
    #[error("hyper-exponential fit failed: {0}")]
    Fit(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("model not admitted: {0}")]
    NotAdmitted(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
