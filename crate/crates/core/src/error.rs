use chrono::NaiveDate;
use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("as_of precedes data: as_of {as_of}, last observation {last}")]
    AsOfPrecedesData { as_of: NaiveDate, last: NaiveDate },

    #[error("insufficient history: need {needed} days, have {available}")]
    InsufficientHistory { needed: usize, available: usize },

    #[error("no complete calendar year")]
    NoCompleteYear,

    #[error("no valid 1990 base")]
    NoValidBase,

    #[error("cannot splice disjoint series")]
    DisjointSplice,

    #[error("unmapped motive power: {0}")]
    UnmappedMotivePower(String),

    #[error("implausible fleet half-life: {0} years")]
    ImplausibleHalfLife(f64),

    #[error("undefined relative error: actual value at index {index} is zero")]
    UndefinedRelativeError { index: usize },

    #[error("degenerate relationship: sample covariance is singular")]
    DegenerateRelationship,

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("no overlap: {0}")]
    NoOverlap(String),

    #[error("frequency mismatch for {code}: expected {expected}, found {found}")]
    FrequencyMismatch {
        code: String,
        expected: String,
        found: String,
    },

    #[error("indicator {indicator} does not cover year {year}")]
    MissingCoverage { indicator: String, year: i32 },

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("constant column {0}")]
    ConstantColumn(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("serialization: {0}")]
    Serialization(String),

    #[error("simulation {index}: {source}")]
    Simulation {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{stage} stage{}: {source}", in_sector(.sector))]
    Stage {
        stage: &'static str,
        sector: Option<String>,
        #[source]
        source: Box<Error>,
    },
}

fn in_sector(sector: &Option<String>) -> String {
    sector.as_ref().map(|s| format!(" [{s}]")).unwrap_or_default()
}

impl Error {
    /// Tag the error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str, sector: Option<String>) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                sector,
                source: Box::new(e),
            },
        }
    }

    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
