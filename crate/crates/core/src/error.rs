//! Error type shared by every module of the toolkit.

use thiserror::Error;

/// Everything that can go wrong when building grids, transforming states,
/// assembling kernels, or integrating the relaxation dynamics.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("grid error: {reason}")]
    Grid { reason: String },

    #[error("grid mismatch: {context}")]
    GridMismatch { context: String },

    #[error("coverage error: {reason}")]
    Coverage { reason: String },

    #[error("shift leaves the {axis} domain: |shift| = {shift:.6e} exceeds margin {margin:.6e}")]
    OutOfDomain { axis: String, shift: f64, margin: f64 },

    #[error("fiber mode k = {k} is not stored in this amplitude")]
    MissingMode { k: i32 },

    #[error("fiber samples are not uniform over one period: {reason}")]
    NonuniformFiber { reason: String },

    #[error("unsupported symbol: {reason}")]
    UnsupportedSymbol { reason: String },

    #[error("divergent quadrature: {reason}")]
    Divergence { reason: String },

    #[error("unstable step: dt = {step:.6e} exceeds the bound {bound:.6e}")]
    Stability { step: f64, bound: f64 },

    #[error("basis truncation too severe: {detail}")]
    Truncation { detail: String },

    #[error("grid cannot resolve the requested spectrum: {reason} (suggested point count: {suggested_len})")]
    Resolution { reason: String, suggested_len: usize },

    #[error("insufficient signal: {reason}")]
    InsufficientSignal { reason: String },

    #[error("anisotropic intensities: {reason}")]
    Anisotropic { reason: String },

    #[error("mean-zero hypothesis violated: fiber-mean mode has relative norm {norm:.3e}")]
    NonzeroMean { norm: f64 },
}

pub type Result<T> = std::result::Result<T, ModelError>;
