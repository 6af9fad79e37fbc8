use std::path::PathBuf;

use crate::timeseries::MonthKey;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid month {year}-{month}: month must be in 1..=12")]
    InvalidMonth { year: i32, month: u32 },

    #[error("cannot parse month key {0:?}, expected YYYY-MM")]
    BadMonthKey(String),

    #[error("series {name:?} has a non-finite value at index {index}")]
    NonFinite { name: String, index: usize },

    #[error("series {name:?} is not contiguous: expected {expected}, found {found}")]
    Gap {
        name: String,
        expected: MonthKey,
        found: MonthKey,
    },

    #[error("series {0:?} is empty")]
    EmptySeries(String),

    #[error("series ranges have no common months")]
    EmptyIntersection,

    #[error("requested range {from}..={to} is outside the table range {first}..={last}")]
    OutOfRange {
        from: MonthKey,
        to: MonthKey,
        first: MonthKey,
        last: MonthKey,
    },

    #[error("column {0:?} appears more than once")]
    DuplicateColumn(String),

    #[error("column {name:?} has {got} rows, table has {expected}")]
    ColumnLength {
        name: String,
        expected: usize,
        got: usize,
    },

    #[error("unknown column {0:?}")]
    UnknownColumn(String),

    #[error("table has no target column")]
    NoTarget,

    #[error("too short: {0}")]
    TooShort(String),

    #[error("anchor mismatch: {0}")]
    AnchorMismatch(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("non-finite value in column {column:?} at row {row}")]
    NonFiniteData { column: String, row: usize },

    #[error("fitted feature {0:?} is missing from the input rows")]
    MissingFeature(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("actual values have zero variance")]
    DegenerateActuals,

    #[error("empty input: {0}")]
    Empty(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("malformed {schema} input at line {line}: {message}")]
    Parse {
        schema: &'static str,
        line: u64,
        message: String,
    },

    #[error("invalid model document: {0}")]
    InvalidModel(String),

    #[error("cannot read {path}: {source}")]
    UnreadableFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the filesystem rather than of the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::UnreadableFile { .. } | Error::Io(_))
    }
}
