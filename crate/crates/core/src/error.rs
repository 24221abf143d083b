use thiserror::Error;

/// Errors raised by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("point outside the open domain: {0}")]
    Domain(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("ill-conditioned extrapolation: {0}")]
    Conditioning(String),

    #[error("rounding noise {noise:.3e} exceeds 1% of tensor scale {scale:.3e}; increase the step size h (currently {h})")]
    NoisePanic { noise: f64, scale: f64, h: f64 },

    #[error("consecutive loop states {index} and {next} are orthogonal (|overlap| = {overlap:.3e})")]
    OrthogonalLink {
        index: usize,
        next: usize,
        overlap: f64,
    },

    #[error("{rejected} of {drawn} leg draws violated 1 + x > 0 (limit 1%)")]
    RejectionOverflow { rejected: u64, drawn: u64 },

    #[error("parse error: {0}")]
    Parse(String),
}

impl GeoError {
    /// True for failures of numerical conditioning rather than of input validity.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            GeoError::Numerical(_) | GeoError::Conditioning(_) | GeoError::NoisePanic { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, GeoError>;
