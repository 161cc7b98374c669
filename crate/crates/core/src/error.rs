use thiserror::Error;

use crate::instance::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input; the message names the offending line or field.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid instance: {}", format_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("arrival sequence exhausted: step {step} exceeds n = {n}")]
    SequenceExhausted { step: usize, n: usize },

    #[error("job type {0} has zero arrival probability")]
    InvalidArrival(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("ratio undefined: expected optimum is zero")]
    UndefinedRatio,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
