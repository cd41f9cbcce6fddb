//! Error type shared by all core modules.

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoreError {
    /// Bad input data or options (unknown tags, malformed ranges, ...).
    #[error("configuration error: {0}")]
    Config(String),
    /// Vector/matrix length does not match what an operation expects.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// Numeric input failed a validity check (non-orthonormal rotation, ...).
    #[error("validation error: {0}")]
    Validation(String),
    /// The simulation produced a non-finite state.
    #[error("simulation diverged at t={t}: {what}")]
    SimDiverged { t: f64, what: String },
    /// Operation is not applicable to the given robot or mode.
    #[error("not applicable: {0}")]
    NotApplicable(String),
    /// Lookup of a keyed resource (embedding row, robot id) failed.
    #[error("lookup error: {0}")]
    Lookup(String),
    /// Internal state machine misuse (e.g. backward before forward).
    #[error("state error: {0}")]
    State(String),
}

pub type CoreResult<T> = core::result::Result<T, CoreError>;
