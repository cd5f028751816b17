use thiserror::Error;

/// Errors surfaced by model construction, prediction and experiment runs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Cholesky factorization failed even after jitter escalation.
    #[error("numerical conditioning failure: {0}")]
    Conditioning(String),

    /// A query or shift landed outside an evaluator's declared domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// ODE state became non-finite during integration.
    #[error("integration blow-up at step {step} (t = {t}): state became non-finite")]
    IntegrationBlowup { step: usize, t: f64 },

    /// More than half of the trials in an experiment cell failed.
    #[error("experiment failure: {0}")]
    Experiment(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
