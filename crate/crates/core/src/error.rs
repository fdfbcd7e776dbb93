use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("configuration error: column `{0}` not found in input header")]
    MissingColumn(String),

    #[error("data error at line {line}: {message}")]
    Data { line: u64, message: String },

    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    #[error("no units below the at-risk-of-poverty threshold {threshold}")]
    PovertyDegenerate { threshold: f64 },

    #[error("calibration matrix is singular: column `{column}` is collinear (condition number {condition:.3e})")]
    Collinearity { column: String, condition: f64 },

    #[error("alignment degenerate: the linearized variable is explained by the auxiliaries in both samples")]
    AlignmentDegenerate,

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("design error: {0}")]
    Design(String),

    #[error("numerical inconsistency: {0}")]
    Numerical(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::MissingColumn(_) | Error::Design(_) | Error::Json(_) => 2,
            Error::Data { .. } | Error::Io(_) => 3,
            Error::Degenerate(_)
            | Error::PovertyDegenerate { .. }
            | Error::Collinearity { .. }
            | Error::AlignmentDegenerate
            | Error::Contract(_)
            | Error::Numerical(_) => 4,
        }
    }

    pub(crate) fn data(line: u64, message: impl Into<String>) -> Self {
        Error::Data {
            line,
            message: message.into(),
        }
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line()).unwrap_or(0);
        match err.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::data(line, format!("{other:?}")),
        }
    }
}
