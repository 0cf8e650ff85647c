use thiserror::Error;

/// Errors raised by grid construction, functional evaluation and the solver.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violated a documented precondition. The string names the field.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    /// A nodal vector did not match the grid it was used with.
    #[error("length mismatch: expected {expected} nodal values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// The field has (numerically) zero L2 mass, so the charge constraint
    /// cannot determine a frequency.
    #[error("degenerate field: integral of u^2 is below {tol:e}")]
    DegenerateField { tol: f64 },

    /// The field has no gradient mass, so the barycenter is undefined.
    #[error("degenerate gradient: |grad u| vanishes everywhere")]
    DegenerateGradient,

    /// Erosion removed every node of the domain (the localization radius is
    /// too large for the shape).
    #[error("eroded set is empty: distance {dist} exhausts the shape")]
    EmptyErosion { dist: f64 },

    /// The masked grid splits into several connected components.
    #[error("mask is not connected: {components} components found")]
    MaskNotConnected { components: usize },

    /// A point that must lie in the eroded domain D^- does not.
    #[error("start point ({x}, {y}) lies outside the eroded domain")]
    StartOutsideDomain { x: f64, y: f64 },

    /// Configuration file problems, with 1-based line numbers where known.
    #[error("config error: {0}")]
    Config(String),

    #[error("duplicate table entry for key {0}")]
    DuplicateTableKey(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
