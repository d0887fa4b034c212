use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("invalid utility specification: {0}")]
    InvalidUtility(String),

    #[error("expected utility {0} lies outside the range of the utility function")]
    Domain(f64),

    #[error(
        "state space of {entries} entries exceeds the limit of {limit}; \
         retry with grid_step >= {suggested_step:.6}"
    )]
    StateSpace {
        entries: usize,
        limit: usize,
        suggested_step: f64,
    },

    #[error("serialization: {0}")]
    Serialization(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
