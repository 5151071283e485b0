use thiserror::Error;

/// Errors raised by the guidance library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QlawError {
    #[error("invalid orbital elements: {0}")]
    InvalidElements(String),

    #[error("degenerate orbit: {0}")]
    DegenerateOrbit(String),

    #[error("singular element set: {0}")]
    SingularElements(String),

    /// The projected gradient vanished, so no thrust direction decreases the
    /// Lyapunov function at this point.
    #[error("null thrust direction (|Phi^T grad| = {0:e})")]
    NullDirection(f64),

    #[error("invalid configuration `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("integration fault: {0}")]
    IntegrationFault(String),

    #[error("no particle converged in {evaluations} evaluations")]
    AllParticlesDiverged { evaluations: usize },

    #[error("scenario file: {0}")]
    ScenarioFile(String),
}

impl QlawError {
    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        QlawError::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }
}

pub type Result<T, E = QlawError> = std::result::Result<T, E>;
