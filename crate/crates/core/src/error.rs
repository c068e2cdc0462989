use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by the simulation and analysis layers.
///
/// Variants are grouped by *why* an operation cannot proceed rather than by
/// module, so callers (and the CLI's exit-code mapping) can distinguish bad
/// inputs from genuine numerical breakdown.
#[derive(Debug, Error)]
pub enum Error {
    /// Operands have incompatible or unexpected shapes.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A parameter value is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidValue(String),

    /// A matrix that must be Hermitian is not, beyond tolerance.
    #[error("matrix not Hermitian: defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { defect: f64, tol: f64 },

    /// A state failed normalization, trace, or positivity requirements.
    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    /// A numerical routine failed to produce a usable result
    /// (no convergence, empty kernel, flat spectrum, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A named observable is missing from a trajectory record.
    #[error("unknown observable '{0}'")]
    UnknownObservable(String),

    /// Records that must share a configuration do not.
    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    /// Not enough data points for the requested analysis.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}
