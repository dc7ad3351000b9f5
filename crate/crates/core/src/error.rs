use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("{path}: malformed file at row {row}: {detail}")]
    MalformedFile {
        path: PathBuf,
        row: usize,
        detail: String,
    },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("truncated input at byte offset {offset}: {detail}")]
    Truncated { offset: u64, detail: String },

    #[error("signal {signal}: digital_min equals digital_max ({value}), scaling undefined")]
    DegenerateScaling { signal: usize, value: i64 },

    #[error("unsupported feature: {0}")]
    Unsupported(String),

    #[error("invalid specification: {0}")]
    Spec(String),

    #[error("singular covariance: {0}")]
    SingularCovariance(String),

    #[error("not ready: {0}")]
    NotReady(String),

    #[error("operation on an empty structure: {0}")]
    EmptyStructure(&'static str),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate trial: {0}")]
    DegenerateTrial(String),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the numbers rather than by the input shape
    /// or the file system.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularCovariance(_) | Error::DegenerateTrial(_) | Error::NotReady(_)
        )
    }
}
