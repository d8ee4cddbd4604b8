use std::path::PathBuf;

/// Errors raised anywhere in the annotation engine.
#[derive(thiserror::Error, Debug)]
pub enum Error {
    #[error("buffer of length {len} does not match a {width}x{height} frame with {channels} channel(s)")]
    InvalidBuffer {
        width: usize,
        height: usize,
        channels: usize,
        len: usize,
    },

    #[error("image dimensions must be at least 1x1")]
    ZeroDimension,

    #[error("dimension mismatch: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),

    #[error("region has no pixels")]
    EmptyRegion,

    #[error("no co-occurring pixel pair inside the region")]
    NoPairs,

    #[error("boundary band around the mask is empty")]
    EmptyBoundary,

    #[error("degenerate hull for {0}: zero area")]
    DegenerateHull(&'static str),

    #[error("landmarks must contain exactly 68 points, got {0}")]
    LandmarkCount(usize),

    #[error("region map has an empty region: {0}")]
    EmptyRegionMap(&'static str),

    #[error("cannot select from an empty forgery region list")]
    EmptyList,

    #[error("region touches the image border")]
    RegionTouchesBorder,

    #[error("unknown forgery type: {0}")]
    UnknownType(String),

    #[error("unknown region name: {0}")]
    UnknownRegion(String),

    #[error("invalid threshold {name}: {value}")]
    InvalidThreshold { name: &'static str, value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dataset contains no complete pairs: {0}")]
    EmptyDataset(PathBuf),

    #[error("evaluation input is empty")]
    EmptyInput,

    #[error("length mismatch: {0} responses vs {1} labels")]
    LengthMismatch(usize, usize),

    #[error("lexicon term {term:?} appears in both {first} and {second}")]
    LexiconOverlap {
        term: String,
        first: String,
        second: String,
    },

    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
