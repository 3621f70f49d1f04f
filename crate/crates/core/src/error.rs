use std::fmt;

/// Failure kinds shared by every solver in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("lambda = {lambda} lies on the branch cut (-inf, -mu*|xi|^2]")]
    BranchCut { lambda: Complex },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical error: {msg}")]
    Numerical { msg: String, condition: Option<f64> },
    #[error("accuracy error: {0}")]
    Accuracy(String),
    #[error("near-degenerate geometry: {0}")]
    NearDegenerate(String),
    #[error("fixed-point iteration diverged: {0}")]
    Divergence(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Thin wrapper so the error enum can print complex numbers without pulling
/// `num_complex` into its public derive bounds.
#[derive(Debug, Clone, Copy)]
pub struct Complex(pub num_complex::Complex64);

impl fmt::Display for Complex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:+}i", self.0.re, self.0.im)
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
