use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Operand shapes or channel counts do not line up.
    #[error("shape error: {0}")]
    Shape(String),
    /// Kernel/stride/padding combination yields an empty or negative output.
    #[error("geometry error: {0}")]
    Geometry(String),
    /// Invalid network or run configuration.
    #[error("spec error: {0}")]
    Spec(String),
    /// Malformed file contents (bad magic, truncated payload, bad CSV row).
    #[error("format error in {path}: {msg}")]
    Format { path: PathBuf, msg: String },
    /// Dataset is structurally invalid.
    #[error("data error: {0}")]
    Data(String),
    /// NaN or infinity encountered where finite values are required.
    #[error("non-finite value: {0}")]
    NonFinite(String),
    /// Metric or statistic is undefined for the given input.
    #[error("undefined result: {0}")]
    Undefined(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format { path: path.into(), msg: msg.into() }
    }
}
