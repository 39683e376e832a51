use thiserror::Error;

/// Errors raised by fitting, assembly and inference routines.
#[derive(Debug, Error)]
pub enum Error {
    /// The weighted design at a grid point cannot be solved: fewer than
    /// p+1 distinct covariate values carry positive weight, or the normal
    /// equations are too ill-conditioned.
    #[error("singular design at x0 = {x0}: {reason}")]
    SingularDesign { x0: f64, reason: String },

    /// The kernel density estimate vanishes at the grid point.
    #[error("empty kernel window at x0 = {x0}")]
    EmptyWindow { x0: f64 },

    /// Local SST is below tolerance (constant-response window), so the
    /// pointwise R-squared is undefined.
    #[error("local R-squared undefined at x0 = {x0}: local SST below tolerance")]
    UndefinedR2 { x0: f64 },

    /// A grid-sweep failure tagged with the offending grid index.
    #[error("grid point {index}: {source}")]
    AtGridPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    /// Every grid point failed; no global quantity can be formed.
    #[error("no feasible grid points")]
    AllPointsInfeasible,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Conservative F denominator is nonpositive (SSR exceeds the raw
    /// total sum of squares).
    #[error("nonpositive F denominator: {value}")]
    NonpositiveDenominator { value: f64 },

    #[error("degenerate degrees of freedom: df_model = {df_model}, df_resid = {df_resid}")]
    DegenerateDf { df_model: f64, df_resid: f64 },

    /// H* assembly refused: the n x n matrix would exceed the size cap.
    #[error("n = {n} exceeds the H* assembly cap {cap}")]
    ProblemTooLarge { n: usize, cap: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Too many Monte Carlo replicates failed to fit.
    #[error("{failed} of {total} replicates failed; aborting study")]
    TooManyFailures { failed: usize, total: usize },

    #[error("quadrature did not converge: achieved error estimate {achieved:e}")]
    QuadratureNonconvergence { achieved: f64 },
}

impl Error {
    pub fn at_grid_point(self, index: usize) -> Error {
        Error::AtGridPoint {
            index,
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad input rather than numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_) | Error::DimensionMismatch { .. } | Error::ProblemTooLarge { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
