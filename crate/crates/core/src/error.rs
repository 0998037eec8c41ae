//! Crate-wide error type. Estimator failure modes are first-class variants so
//! callers (the benchmark harness, the CLI exit-code mapping) can branch on them.

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A configuration or scene constraint is violated.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A ratio-update denominator collapsed: the current partial steering set
    /// cancels every source's contribution, so the update is undefined.
    #[error("degenerate update {update}: denominator modulus {denominator:.3e} below threshold {threshold:.3e}")]
    DegenerateUpdate {
        update: usize,
        denominator: f64,
        threshold: f64,
    },

    /// A cost function evaluated to NaN/∞, or the covariance failed its
    /// Hermitian/positive-semidefinite sanity check.
    #[error("non-finite cost at update {update}: {detail}")]
    NonFiniteCost { update: usize, detail: String },

    /// Elevation is (numerically) zero, so azimuth carries no information.
    #[error("azimuth undefined: sin(theta) = {sin_theta:.3e} is below resolution")]
    AzimuthUndefined { sin_theta: f64 },

    /// Steering elements imply |sin(theta)| > 1 beyond tolerance.
    #[error("inconsistent steering: implied sin(theta) = {sin_theta:.6} exceeds 1")]
    InconsistentSteering { sin_theta: f64 },

    /// The spectrum grid search found fewer local maxima than sources.
    #[error("peak deficit: found {found} of {expected} spectrum peaks")]
    PeakDeficit {
        expected: usize,
        found: usize,
        /// DOAs of the peaks that were found, strongest first.
        peaks: Vec<(f64, f64)>,
    },

    /// An input collection was empty where at least one element is required.
    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A snapshot file failed structural validation.
    #[error("malformed snapshot file: {0}")]
    MalformedFile(String),
}

pub type Result<T> = std::result::Result<T, Error>;
