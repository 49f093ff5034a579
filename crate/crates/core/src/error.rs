use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid conversion ratio {0}: must be positive")]
    InvalidRatio(f64),

    #[error("invalid size {0}: must be non-negative and finite")]
    InvalidSize(f64),

    #[error("unknown language `{0}`")]
    UnknownLanguage(String),

    /// `line` is the 1-based line of the offending input, header included.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("language level {level} outside covered interval ({low}, {high}]")]
    OutOfRange { level: f64, low: f64, high: f64 },

    #[error("fuzzy level index {index} out of bounds (1..={count})")]
    InvalidIndex { index: usize, count: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("record `{id}`: {message}")]
    InvalidRecord { id: String, message: String },

    #[error("stale weights: trained on level set {expected}, given {found}")]
    StaleWeights { expected: String, found: String },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("empty sample")]
    EmptySample,

    #[error("incompatible inputs: {0}")]
    Incompatible(String),

    #[error("unknown experiment {0} (expected 1..=7)")]
    UnknownExperiment(usize),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
