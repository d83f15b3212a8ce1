use thiserror::Error;

/// Errors raised by the mechanism library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("evidence space mismatch: expected {expected} outcomes, got {found}")]
    SpaceMismatch { expected: usize, found: usize },

    #[error("invalid evidence space: {0}")]
    InvalidSpace(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("weights are not on the simplex: {0}")]
    InvalidWeights(String),

    #[error("invalid mechanism parameters: {0}")]
    InvalidParams(String),

    #[error("invalid license: {0}")]
    InvalidLicense(String),

    #[error("outcome {outcome} is out of range for a space of {size} outcomes")]
    OutcomeOutOfRange { outcome: usize, size: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("empty credal set")]
    EmptyCredalSet,

    #[error("no grid point satisfies the constraint at resolution {resolution}")]
    EmptyFeasibleSet { resolution: usize },

    #[error("bet {lambda} is inadmissible (admissible range [0, {ceiling}])")]
    InadmissibleBet { lambda: f64, ceiling: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed JSON: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Serialization(err.to_string())
    }
}

/// Deserializes JSON, naming the offending field path in the error.
pub(crate) fn from_json_str<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| Error::Serialization(describe(&e)))
}

/// Like [`from_json_str`] for an already parsed value.
pub(crate) fn from_json_value<T: serde::de::DeserializeOwned>(value: serde_json::Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| Error::Config(describe(&e)))
}

fn describe<E: std::fmt::Display>(e: &serde_path_to_error::Error<E>) -> String {
    let path = e.path().to_string();
    if path == "." {
        e.inner().to_string()
    } else {
        format!("field `{path}`: {}", e.inner())
    }
}
