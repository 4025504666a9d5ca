use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A query referenced something outside the object's domain (unknown
    /// point, empty fiber, mismatched universes).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource cap exceeded: {0}")]
    Resource(String),

    /// The finite window is too small to represent what was asked.
    #[error("truncation: {0}")]
    Truncation(String),

    #[error("invalid subgroup: {0}")]
    InvalidSubgroup(String),

    #[error("malformed certificate: {0}")]
    Malformed(String),

    /// A sub-certificate does not meet the bound a combinator needs.
    #[error("parameter mismatch in {stage}: {inequality}")]
    ParameterMismatch { stage: String, inequality: String },

    /// The input was well formed but the operation declines it.
    #[error("refused: {0}")]
    Refused(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn mismatch(stage: impl Into<String>, inequality: impl Into<String>) -> Self {
        Error::ParameterMismatch {
            stage: stage.into(),
            inequality: inequality.into(),
        }
    }

    /// Prefixes the message with the stage that raised it.
    pub fn in_stage(self, stage: &str) -> Self {
        let at = |m: String| format!("{stage}: {m}");
        match self {
            Error::Domain(m) => Error::Domain(at(m)),
            Error::Resource(m) => Error::Resource(at(m)),
            Error::Truncation(m) => Error::Truncation(at(m)),
            Error::InvalidSubgroup(m) => Error::InvalidSubgroup(at(m)),
            Error::Malformed(m) => Error::Malformed(at(m)),
            Error::Refused(m) => Error::Refused(at(m)),
            Error::Internal(m) => Error::Internal(at(m)),
            Error::Parse(m) => Error::Parse(at(m)),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
