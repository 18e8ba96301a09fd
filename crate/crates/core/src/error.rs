use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the requested operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A real argument sits on (or numerically on) an atom of the measure.
    #[error("singularity: argument {argument} is within {distance:e} of an atom")]
    Singularity { argument: f64, distance: f64 },

    /// An integral that the operation needs is infinite.
    #[error("divergent integral: {0}")]
    Divergence(String),

    /// An iterative solver failed to reach its tolerance.
    #[error("iteration failure after {iterations} iterations (residual {residual:e}): {context}")]
    IterationFailure { context: String, iterations: usize, residual: f64 },

    /// Two independent evaluation routes disagree beyond the allowed margin.
    #[error("consistency error: {0}")]
    Consistency(String),

    /// The measure description violates a structural invariant.
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    /// The importance-sampling proposal has a non-positive precision.
    #[error("tilt infeasible: {0}")]
    TiltInfeasible(String),

    /// The request is outside the regime where the estimator is meaningful.
    #[error("refused: {0}")]
    Refused(String),

    /// A configuration value is malformed.
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
