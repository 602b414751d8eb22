use thiserror::Error;

/// Crate-wide error type.
///
/// Analytic routines report bad inputs and regimes where a model stops being
/// meaningful (instability, infinite moments, degenerate estimator recursions)
/// rather than returning NaN. The simulator reports configuration problems and
/// aborts runs whose queues grow without bound.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A requested moment does not exist for the given distribution.
    #[error("infinite moment: {0}")]
    InfiniteMoment(String),

    /// Offered load at or beyond the capacity of the model under evaluation.
    #[error("unstable: utilization {utilization:.6} >= 1 ({context})")]
    Unstable { utilization: f64, context: String },

    /// The high-traffic state process drifts away and has no steady state.
    #[error("no steady state: {0}")]
    Drift(String),

    /// An estimator recursion left its meaningful range.
    #[error("degenerate regime: {0}")]
    Degenerate(String),

    /// A numerical routine failed to reach its tolerance.
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// The matrix-analytic fixed-point iteration did not converge.
    #[error("rate-matrix iteration did not converge within {iterations} iterations")]
    NonConvergence { iterations: u64 },

    /// An invalid simulator configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The simulated system accumulated work faster than it drained it.
    #[error(
        "simulation aborted as unstable: observed throughput {throughput:.4} \
         below arrival rate {arrival_rate:.4}"
    )]
    Instability { throughput: f64, arrival_rate: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
