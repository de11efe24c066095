use std::path::PathBuf;

use thiserror::Error;

use crate::raster::ClassId;

pub type Result<T, E = ClearError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ClearError {
    // The cause is part of the message rather than the error chain so it
    // prints once.
    #[error("i/o error on {path}: {cause}")]
    Io { path: PathBuf, cause: std::io::Error },

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("dimension mismatch: {left_name} is {left_rows}x{left_cols} but {right_name} is {right_rows}x{right_cols}")]
    DimensionMismatch {
        left_name: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_name: &'static str,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("landcover id {id} at (row {row}, col {col}) is not in the class table")]
    UnknownClass { id: ClassId, row: usize, col: usize },

    #[error("elevation at (row {row}, col {col}) is not finite")]
    NonFiniteElevation { row: usize, col: usize },

    #[error("invalid window size k={k}: must be odd, >= 3 and <= {max}")]
    InvalidWindow { k: usize, max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown synthetic terrain kind `{0}`")]
    UnknownSynth(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("regions leave {fraction:.4} of pixels uncovered (limit 0.001)")]
    CoverageGap { fraction: f64 },

    #[error("point ({x:.3}, {y:.3}) lies outside every region")]
    OutsideRegions { x: f64, y: f64 },

    #[error("{which} point lies in non-traversable region {region}")]
    NonTraversable { which: &'static str, region: usize },

    #[error("no traversable path from region {from} to region {to}")]
    Unreachable { from: usize, to: usize },

    #[error("patch overlap is empty")]
    EmptyOverlap,
}

impl ClearError {
    pub(crate) fn io(path: impl Into<PathBuf>, cause: std::io::Error) -> Self {
        ClearError::Io { path: path.into(), cause }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        ClearError::InvalidParameter(msg.into())
    }
}
