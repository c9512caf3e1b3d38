use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A distribution description failed validation (bad parameter, weights
    /// that do not sum to one, empty mixture, ...).
    #[error("invalid distribution spec: {0}")]
    InvalidSpec(String),

    /// A caller-supplied argument is out of range for the operation.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The sample is too small for the requested partition or fit.
    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// Moments were requested for a bin with no members.
    #[error("cannot compute moments of an empty bin")]
    EmptyBin,

    /// A bin or fit interval has non-positive width.
    #[error("degenerate support [{a}, {b}]: upper end must exceed lower end")]
    DegenerateSupport { a: f64, b: f64 },

    /// The moment system is numerically singular at this order.
    #[error(
        "ill-conditioned moment system on [{a}, {b}] at order {n_moments} \
         (condition estimate {condition:.3e})"
    )]
    IllConditioned {
        a: f64,
        b: f64,
        n_moments: usize,
        condition: f64,
    },

    /// Partition and fit list disagree when assembling a density.
    #[error("partition has {bins} bins but {fits} fits were supplied")]
    MismatchedFits { bins: usize, fits: usize },

    /// A model CDF strayed outside [0, 1] by more than the tolerance.
    #[error("model cdf value {value} at x = {at} lies outside [0, 1]")]
    InvalidModelCdf { value: f64, at: f64 },

    /// Goodness-of-fit index is undefined when parameters exhaust the sample.
    #[error("goodness-of-fit undefined: sample size {n} does not exceed {params} parameters")]
    DegreesOfFreedom { n: usize, params: usize },

    /// Every grid cell was skipped or failed to solve.
    #[error("grid search found no evaluable (n_bins, n_moments) cell")]
    NoEvaluableCell,
}
