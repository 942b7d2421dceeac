use thiserror::Error;

/// Error type shared by all library operations.
#[derive(Debug, Error)]
pub enum LtcError {
    /// Inputs that do not fit together: mismatched coordinate sets,
    /// moduli, or layer indices.
    #[error("structural error: {0}")]
    Structure(String),

    /// Mathematically invalid request (inverse of zero, distance of the
    /// trivial code, non-prime modulus).
    #[error("domain error: {0}")]
    Domain(String),

    /// An enumeration guard was hit before doing the work.
    #[error("resource budget exceeded: {0}")]
    Resource(String),

    /// The operation is not defined for these arguments (e.g. a
    /// containment graph between non-adjacent layers).
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// Malformed serialized data.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, LtcError>;
