use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation failed{}: {reason}", index.map(|i| format!(" at map {i}")).unwrap_or_default())]
    Validation { index: Option<usize>, reason: String },
    #[error("undecidable: {0}")]
    Undecidable(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("window carries no mass (mass = {mass})")]
    EmptyWindow { mass: f64 },
    #[error("mass too small: acceptance {acceptance:.3e} ({detail})")]
    MassTooSmall { acceptance: f64, detail: String },
    #[error("thin column: only {count} points")]
    ThinColumn { count: usize },
    #[error("need at least 3 levels, got {0}")]
    TooFewLevels(usize),
    #[error("sequence is not purely periodic")]
    NotPeriodic,
    #[error("empty input: {0}")]
    Empty(String),
    #[error("at index {index}: {source}")]
    At { index: usize, source: Box<Error> },
}

impl Error {
    pub fn at(self, index: usize) -> Error {
        Error::At { index, source: Box::new(self) }
    }
}
