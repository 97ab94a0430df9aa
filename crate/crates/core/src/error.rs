use thiserror::Error;

/// Errors raised by the symbolic engine and the numeric layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("differentiation would create a jet of order {order} (maximum is 3)")]
    JetOrderExceeded { order: usize },

    #[error("unbound symbol `{0}` during evaluation")]
    UnboundSymbol(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("bad parameters: {0}")]
    BadParams(String),

    #[error("structure is not integrable: {0}")]
    NotIntegrable(String),

    #[error("exterior derivative of the contact form is not anti-self-dual: {0}")]
    NotAntiSelfDual(String),

    #[error("constraint violated: {0}")]
    ConstraintViolated(String),

    #[error("evaluation point {0} lies on the pole set")]
    AtPole(f64),

    #[error("4-form is not a multiple of the volume form: {0}")]
    NotVolumeMultiple(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
