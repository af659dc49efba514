use thiserror::Error;

/// Crate-wide error type.
///
/// Validation errors carry the path of the offending field so callers can
/// report exactly one field per failure.
#[derive(Debug, Error)]
pub enum Error {
    /// A value failed validation. `field` is the config/type field path.
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },

    /// The input document could not be parsed at all.
    #[error("parse error: {0}")]
    Parse(String),

    /// Effectiveness and scenario sets do not describe the same scenarios.
    #[error("scenario ids mismatch: {0}")]
    ScenarioMismatch(String),

    /// Trace generation would exceed the configured event budget.
    #[error("event budget exceeded: expected ~{expected:.0} events, budget {budget}")]
    EventBudget { expected: f64, budget: u64 },

    /// A trace with zero sign-ins cannot be aggregated.
    #[error("empty trace: no sign-ins recorded")]
    EmptyTrace,

    /// Cohen's d is undefined when both samples are constant.
    #[error("zero pooled variance: both samples are constant")]
    ZeroPooledVariance,
}

impl Error {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
