use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported image format: {0}")]
    Format(String),
    #[error("image codec error: {0}")]
    Codec(#[from] image::ImageError),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("shape mismatch: expected {expected_w}x{expected_h}, got {got_w}x{got_h}")]
    ShapeMismatch {
        expected_w: usize,
        expected_h: usize,
        got_w: usize,
        got_h: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("skeleton is not one pixel wide at {0:?}")]
    NotThin(crate::Pixel),
    #[error("pixel {pixel:?} outside a {width}x{height} image")]
    OutOfBounds {
        pixel: crate::Pixel,
        width: usize,
        height: usize,
    },
    #[error("degenerate direction fit: all window pixels coincide")]
    DegenerateFit,
    #[error("could not place {requested} worms under the overlap policy after {attempts} attempts")]
    InfeasiblePacking { requested: usize, attempts: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the caller's input rather than an internal failure.
    /// Missing files count as the caller's; other I/O failures do not.
    pub fn is_input_contract(&self) -> bool {
        match self {
            Error::Io { source, .. } => source.kind() == std::io::ErrorKind::NotFound,
            Error::InfeasiblePacking { .. } => false,
            _ => true,
        }
    }
}
