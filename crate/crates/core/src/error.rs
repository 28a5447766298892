use thiserror::Error;

/// Errors raised by the signal chain, estimators and plant models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("singular fit: {0}")]
    SingularFit(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("stiffness reference {s_ref} is not above the model minimum {minimum}")]
    StiffnessInfeasible { s_ref: f64, minimum: f64 },

    #[error("no taut equilibrium: {0}")]
    InfeasibleEquilibrium(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty probe sweep")]
    EmptySweep,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
