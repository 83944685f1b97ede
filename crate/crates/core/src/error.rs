use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("crop {width}x{height} at ({x}, {y}) exceeds {img_width}x{img_height} raster")]
    CropOutOfBounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
        img_width: usize,
        img_height: usize,
    },

    #[error("degenerate corner configuration: {0}")]
    DegenerateCorners(String),

    #[error("odd raster dimensions {0}x{1}: Bayer sampling needs full 2x2 quads")]
    OddDimensions(usize, usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("crop of {0}x{0} exceeds the valid (non-border-fill) region")]
    CropExceedsValidRegion(usize),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("too small: {0}")]
    TooSmall(String),

    #[error("insufficient sources for class {class}: need {needed}, have {available}")]
    InsufficientSources {
        class: String,
        needed: usize,
        available: usize,
    },

    #[error("frequency rebalancing exhausted its retry budget for split(s): {}", .0.join(", "))]
    RebalanceExhausted(Vec<String>),

    #[error("missing results for ids: {}", .0.join(", "))]
    MissingResults(Vec<String>),

    #[error("submission {method} is missing image {id} ({path})")]
    MissingImage {
        method: String,
        id: String,
        path: PathBuf,
    },

    #[error("unknown image id {0}")]
    UnknownImageId(String),

    #[error("unknown judge {0}")]
    UnknownJudge(String),

    #[error("unknown query {query_index} for judge {judge}")]
    UnknownQuery { judge: String, query_index: usize },

    #[error("score {0} out of range 1..=5")]
    ScoreOutOfRange(i64),

    #[error("query {query_index} for judge {judge} already rated")]
    AlreadyRated { judge: String, query_index: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Codec {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("jpeg codec: {0}")]
    Jpeg(#[source] image::ImageError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
