use thiserror::Error;

use crate::model::TraitKind;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed input data. `line` is 1-based; 0 means "not line-specific".
    #[error("line {line}, field `{field}`: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },

    #[error("ingest error: {0}")]
    Ingest(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("data integrity error: {0}")]
    DataIntegrity(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("zero-norm feature vector")]
    ZeroNorm,

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("all iris subimages fully occluded")]
    FullyOccluded,

    #[error("missing score for trait {0}")]
    MissingScore(TraitKind),
}
