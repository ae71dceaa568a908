//! Shared error type for the whole library.

use thiserror::Error;

/// Errors reported by kernel construction, solvers and diagnostics.
#[derive(Error, Debug)]
pub enum Error {
    /// A kernel density failed one of the admissibility checks.
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    /// The grid is too coarse relative to the look-ahead length.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// Discretizing the kernel would require more cells than the hard cap.
    #[error("truncation error: {0}")]
    Truncation(String),

    /// Two profiles that must share a grid do not, or a grid is malformed.
    #[error("grid error: {0}")]
    Grid(String),

    /// A state value or parameter lies outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// A time step violates the stability limit.
    #[error("stability error: {0}")]
    Stability(String),

    /// Non-finite values appeared during a march.
    #[error("numerical blowup: {0}")]
    NumericalBlowup(String),

    /// The requested closed-form solution is not available for this model.
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    /// Two curves that must be ordered cross each other.
    #[error("path order error: {0}")]
    PathOrder(String),

    /// A traced curve left the computational domain; the partial path is returned.
    #[error("curve left the domain at t = {exit_time}")]
    DomainExit {
        exit_time: f64,
        partial: crate::characteristics::CharacteristicPath,
    },

    /// A test function is not compactly supported inside the space-time box.
    #[error("support error: {0}")]
    Support(String),

    /// A regression fit was requested on inadmissible data.
    #[error("fit error: {0}")]
    Fit(String),

    /// Scale separation requirements between datum parameters are violated.
    #[error("scale error: {0}")]
    Scale(String),

    /// I/O failure while reading or writing artifacts.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed JSON configuration or report.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// Malformed tabular data.
    #[error("csv error: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;
