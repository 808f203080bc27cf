use thiserror::Error;

/// Errors raised by model construction, evaluation and integration.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("initial elastic energy must be positive, got {0} J")]
    DegenerateCharge(f64),

    #[error("spring cannot lift the system out of the charged posture: {0}")]
    CannotLift(String),

    #[error("effective inertia is non-positive ({0}); mass layout is corrupt")]
    NonPositiveInertia(f64),

    #[error("step size underflow at t = {t} s (h = {h:e} s)")]
    StepUnderflow { t: f64, h: f64 },

    #[error("state left the admissible domain at t = {t} s without an event")]
    DomainExit { t: f64 },

    #[error("no event within the integration horizon of {0} s")]
    NoEvent(f64),

    #[error("non-finite state at t = {0} s")]
    NonFinite(f64),

    #[error("missing field `{0}`")]
    MissingField(&'static str),

    #[error("parameter {value} outside the admissible range [{lo}, {hi}] for {what}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("csv: {0}")]
    Csv(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Checks that `value` is finite and strictly positive.
pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::invalid(name, format!("must be > 0, got {value}")))
    }
}

/// Checks that `value` is finite and non-negative.
pub(crate) fn non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::invalid(name, format!("must be >= 0, got {value}")))
    }
}
