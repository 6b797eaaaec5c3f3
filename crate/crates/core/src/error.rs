use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sensor geometry {width}x{height} is too small (minimum 8x8)")]
    GeometryTooSmall { width: u32, height: u32 },

    #[error("event {index} at ({x}, {y}) lies outside the {width}x{height} sensor")]
    OutOfBounds {
        index: usize,
        x: u32,
        y: u32,
        width: u32,
        height: u32,
    },

    #[error("event {index} has timestamp {t} us, earlier than the previous event ({prev} us)")]
    Unsorted { index: usize, t: u64, prev: u64 },

    #[error("packet window must be positive")]
    ZeroWindow,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("marker id {id} is not in dictionary `{name}` ({len} entries)")]
    UnknownMarker { id: usize, name: String, len: usize },

    #[error("invalid dictionary: {0}")]
    Dictionary(String),

    #[error("ground truth does not line up with the detection report: {0}")]
    Misaligned(String),

    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, Error>;
