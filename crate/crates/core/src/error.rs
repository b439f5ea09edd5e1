use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} is outside the domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: String,
    },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("integration left the physical state set at step {step} (Bloch norm² excess {excess:e})")]
    IntegrationBlowup { step: usize, excess: f64 },

    #[error("trajectory {trajectory} failed after {clamp_events} clamp events: {source}")]
    Trajectory {
        trajectory: usize,
        clamp_events: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("first-law residual {residual:e} exceeds {tolerance:e} at step {step}")]
    FirstLawViolation {
        step: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("output invariant violated: {0}")]
    OutputInvariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
