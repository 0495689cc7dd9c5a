//! Crate-wide error type.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A constructor or operation received a value outside its domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An operation was called with a reduced temperature on the wrong side
    /// of the transition.
    #[error("wrong phase: {0}")]
    WrongPhase(String),

    /// The rate is not defined at t = 0: the broken-phase limit is 1 while
    /// the symmetric-phase value diverges, so we refuse to evaluate.
    #[error("cannot evaluate at the critical point t = 0")]
    CriticalPoint,

    /// The one-loop propagator renormalization breaks down: Z = 1/(1 - Pi)
    /// has a pole at Pi = 1 and the perturbative result is not trustworthy
    /// near it.
    #[error("renormalization pole reached: polarization {pi:.6e} >= {limit}")]
    PoleReached { pi: f64, limit: f64 },

    /// Adaptive quadrature exhausted its subdivision budget.
    #[error(
        "quadrature failed to converge: error estimate {error:.3e} after \
         {subdivisions} subdivisions (best value {best:.6e})"
    )]
    ConvergenceFailure {
        best: f64,
        error: f64,
        subdivisions: usize,
    },

    /// The analytic bound on the neglected integrand tail beyond `k_max`
    /// exceeds the accepted budget; the cutoff is too small.
    #[error(
        "integrand tail beyond k_max = {k_max} too fat: bound {tail_bound:.3e} \
         exceeds budget {budget:.3e}"
    )]
    TailTooFat {
        k_max: f64,
        tail_bound: f64,
        budget: f64,
    },

    /// The extrapolation fit could not be solved reliably.
    #[error("ill-conditioned extrapolation: {0}")]
    IllConditioned(String),

    /// Fewer usable data points than the operation needs.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Every input point fell under a mask threshold.
    #[error("all points masked: {0}")]
    AllMasked(String),

    /// The normal equations are singular; the model carries no information
    /// about at least one parameter on this data set.
    #[error("degenerate jacobian: {0}")]
    DegenerateJacobian(String),

    /// A curve file or stream could not be decoded.
    #[error("malformed curve data: {0}")]
    Format(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
