use thiserror::Error;

/// Errors raised by the benchmark engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("cell {index} has value {value}, outside [0, 1]")]
    CellOutOfRange { index: usize, value: f64 },

    #[error("cell {index} is not finite")]
    NonFiniteCell { index: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("empty design: no material cells")]
    EmptyDesign,

    #[error("mesh has {0} triangles, exceeding the 32-bit STL limit")]
    TooManyTriangles(usize),

    #[error("mesh has no triangles")]
    EmptyMesh,

    #[error("malformed STL: {0}")]
    MalformedStl(String),

    #[error("malformed trace at line {line}: {reason}")]
    MalformedTrace { line: usize, reason: String },

    #[error("artifact `{0}` referenced by the trace is missing")]
    MissingArtifact(String),

    #[error("unknown {kind} `{value}`")]
    Unknown { kind: &'static str, value: String },

    #[error("oracle `{oracle}` does not apply to style {style}")]
    OracleStyleMismatch { oracle: String, style: String },

    #[error("conditional expectation requires an objective value")]
    MissingObjective,

    #[error("expectation kind does not match: {0}")]
    ExpectationKind(String),

    #[error("constraint evaluation failed on design {index}: {reason}")]
    ConstraintEvaluation { index: usize, reason: String },

    #[error("config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
