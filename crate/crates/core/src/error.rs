use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain of the model (negative range, angle at 90°, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Mismatched or empty dimensions.
    #[error("shape error: {0}")]
    Shape(String),

    /// Requested sample count exceeds a single chirp.
    #[error("duration overflow: {requested} samples requested but one chirp holds {available}")]
    DurationOverflow { requested: usize, available: usize },

    /// Binary-tree LO formulas need power-of-two element counts.
    #[error("structure error: {0}")]
    Structure(String),

    /// Invalid or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input failed a structural check (e.g. covariance not Hermitian).
    #[error("validation error: {0}")]
    Validation(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    /// Fewer local maxima than requested targets.
    #[error("degenerate spectrum: found {found} local maxima, {requested} requested")]
    DegenerateSpectrum { found: usize, requested: usize },

    #[error("not found: {0}")]
    NotFound(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
