//! Error types shared across the library.

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Two objects built over different eigenvalue lists or parameter sets
    /// were combined.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// `∫_t^∞ e^{λ_j(t-s)} f(s) ds` with an integrand term that does not
    /// decay relative to `e^{λ_j t}`.
    #[error("divergent improper integral against λ_{j} = {lambda}: term {term} has rate {rate}")]
    DivergentIntegral {
        j: usize,
        lambda: f64,
        rate: f64,
        term: String,
    },

    /// The spectrum is outside the supported class (complex eigenvalues).
    #[error("unsupported spectrum: {0}")]
    UnsupportedSpectrum(String),

    /// An eigenvalue with nonnegative real part: the origin is not a sink.
    #[error("not a sink: eigenvalue {0} is nonnegative")]
    NotASink(f64),

    /// Matrix shape outside the supported class (general n>2, or a
    /// repeated-eigenvalue 2x2 that is not already diagonal).
    #[error("unsupported matrix shape: {0}")]
    UnsupportedShape(String),

    /// A 2x2 matrix with a repeated eigenvalue and a nontrivial nilpotent
    /// part.
    #[error("non-diagonalizable matrix: {0}")]
    NonDiagonalizable(String),

    /// An operation was called on a system in the wrong spacing regime.
    #[error("regime error: {0}")]
    Regime(String),

    /// A vector-field monomial violates the vanishing-order constraint.
    #[error("invalid vector field: {0}")]
    InvalidField(String),

    /// Malformed or out-of-domain input data.
    #[error("input error: {0}")]
    Input(String),

    /// Series normalization precondition failed (leading coefficient != 1).
    #[error("normalization error: {0}")]
    Normalization(String),

    /// A symbolic series exceeded the configured term cap.
    #[error("series term count {count} exceeds cap {cap}; reduce m_max or truncate earlier")]
    TermOverflow { count: usize, cap: usize },

    /// An internal cancellation that the construction guarantees did not
    /// happen; indicates an ordering bug upstream.
    #[error("internal consistency error: {0}")]
    InternalConsistency(String),

    /// Trajectory left the configured validity ball.
    #[error("trajectory escaped the validity ball (radius {radius}) at t = {time}")]
    Escape { time: f64, radius: f64 },

    /// Step-size underflow in the adaptive integrator.
    #[error("integrator step size underflow at t = {time}; the system may be too stiff for the configured ball")]
    Stiffness { time: f64 },

    /// Improper integral without a usable tail bound.
    #[error("quadrature error: {0}")]
    Quadrature(String),

    /// A least-squares fit could not be stabilized.
    #[error("fit error: {0}")]
    Fit(String),

    /// I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
