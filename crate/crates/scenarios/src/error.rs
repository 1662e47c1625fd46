use matchkit::MatchError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error(transparent)]
    Match(#[from] MatchError),
}

pub type Result<T> = std::result::Result<T, ScenarioError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Fails unless every value is finite and at least `min`.
pub(crate) fn check_all(name: &'static str, values: impl IntoIterator<Item = f64>, min: f64) -> Result<()> {
    for v in values {
        if !v.is_finite() || v < min {
            return Err(invalid(name, format!("{v} is not a finite value >= {min}")));
        }
    }
    Ok(())
}
