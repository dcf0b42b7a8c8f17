use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse error class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Runtime,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("column '{column}' has zero variance")]
    ZeroVariance { column: String },

    #[error("degenerate quantile binning: {0}")]
    DegenerateQuantiles(String),

    #[error("invalid fold assignment: {0}")]
    Folds(String),

    #[error("invalid train/test split: {0}")]
    Split(String),

    #[error("singular design matrix: {0}")]
    SingularDesign(String),

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("optimizer failed: {0}")]
    Optimizer(String),

    #[error("pooling requires at least two seeds (got {0})")]
    TooFewSeeds(usize),

    #[error("degenerate chains: {0}")]
    DegenerateChains(String),

    #[error("sweep produced no successful seeds ({failures} failures)")]
    NoSuccessfulSeeds { failures: usize },

    #[error("{0}")]
    Config(String),

    #[error("column '{0}' not found in input header")]
    MissingColumn(String),

    #[error("missing value at row {row}, column '{column}'")]
    MissingValue { row: usize, column: String },

    #[error("non-numeric value '{value}' at row {row}, column '{column}'")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("malformed CSV in {path}: {message}")]
    MalformedCsv { path: PathBuf, message: String },

    #[error("cannot read input {path}: {source}")]
    InputFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization failure: {0}")]
    Serialization(String),
}

impl Error {
    /// Stable, greppable identifier printed in front of every CLI error.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "SS-E001",
            Error::InvalidDataset(_) => "SS-E002",
            Error::ZeroVariance { .. } => "SS-E003",
            Error::DegenerateQuantiles(_) => "SS-E004",
            Error::Folds(_) => "SS-E005",
            Error::Split(_) => "SS-E006",
            Error::SingularDesign(_) => "SS-E007",
            Error::LinearAlgebra(_) => "SS-E008",
            Error::Optimizer(_) => "SS-E009",
            Error::TooFewSeeds(_) => "SS-E010",
            Error::DegenerateChains(_) => "SS-E011",
            Error::NoSuccessfulSeeds { .. } => "SS-E012",
            Error::Config(_) => "SS-E020",
            Error::MissingColumn(_) => "SS-E021",
            Error::MissingValue { .. } => "SS-E022",
            Error::NonNumeric { .. } => "SS-E023",
            Error::MalformedCsv { .. } => "SS-E024",
            Error::InputFile { .. } => "SS-E025",
            Error::Io { .. } => "SS-E030",
            Error::Serialization(_) => "SS-E031",
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => ErrorKind::Usage,
            Error::InvalidDataset(_)
            | Error::ZeroVariance { .. }
            | Error::DegenerateQuantiles(_)
            | Error::MissingColumn(_)
            | Error::MissingValue { .. }
            | Error::NonNumeric { .. }
            | Error::MalformedCsv { .. }
            | Error::InputFile { .. } => ErrorKind::Data,
            _ => ErrorKind::Runtime,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
