use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum HfeError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("singular matrix (|det| = {0:e})")]
    Singular(f64),
    #[error("invariant violated: {what} (residual {residual:e})")]
    Invariant { what: String, residual: f64 },
    #[error("not symplectic (residual {0:e})")]
    NotSymplectic(f64),
    #[error("not a Lagrangian frame: {0}")]
    NotLagrangian(String),
    #[error("frame is not positive (min eigenvalue {0:e})")]
    NotPositive(f64),
    #[error("block pattern violated at {0:?}")]
    Pattern(Vec<(usize, usize)>),
    #[error("square-root tracking failed: {0}")]
    Tracking(String),
    #[error("pairing determinant vanishes (|delta| = {0:e})")]
    DeltaVanishes(f64),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error("nerve inconsistency: {0}")]
    Nerve(String),
    #[error("{0}")]
    Check(String),
}

pub type Result<T> = std::result::Result<T, HfeError>;
