use std::path::PathBuf;

/// Errors produced by the encoding, assignment, loss and evaluation routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("file {path} has {bytes} bytes, not a whole number of {fields}-field float32 records")]
    SizeMismatch {
        path: PathBuf,
        bytes: u64,
        fields: usize,
    },

    #[error("non-finite value in row {row}, field `{field}`")]
    NonFinite { row: usize, field: String },

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("unknown field `{0}` (not present in the point schema)")]
    UnknownField(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("point {index} at ({x}, {y}, {z}) lies outside the region of interest")]
    OutsideRoi { index: usize, x: f64, y: f64, z: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("coordinate ({row}, {col}) is out of range for a {height}x{width} canvas")]
    CoordOutOfRange {
        row: usize,
        col: usize,
        height: usize,
        width: usize,
    },

    #[error("duplicate canvas coordinate ({row}, {col})")]
    DuplicateCoord { row: usize, col: usize },

    #[error("box dimension must be positive, got {0}")]
    NonPositiveDimension(f64),

    #[error("sine residual {0} outside [-1, 1]")]
    AngleResidualOutOfRange(f64),

    #[error("probability {value} at ({row}, {col}) outside (0, 1]")]
    ProbabilityOutOfRange { row: usize, col: usize, value: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
