//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the library.
///
/// Contract violations (bad lengths, unknown nodes, malformed inputs) are
/// errors. Outcomes that are expected values of the algorithms — a rejected
/// hill-climbing move, an infeasible compression — are modeled as values,
/// not as `Err`, except where a whole pipeline run must abort
/// ([`Error::CompressionInfeasible`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// Structural CSV problems: ragged rows, empty files.
    #[error("csv structure: {message}{}", row.map(|r| format!(" (data row {r})")).unwrap_or_default())]
    CsvStructure {
        message: String,
        /// Zero-based index into the data body (header excluded), when known.
        row: Option<usize>,
    },

    #[error("missing value at data row {row}, column '{column}'")]
    MissingValue { row: usize, column: String },

    #[error("cannot parse '{value}' as a number at data row {row}, column '{column}'")]
    NumericParse {
        row: usize,
        column: String,
        value: String,
    },

    /// A ground-truth network file failed validation.
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    /// An operation was called outside its contract.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Most-frequent compression could not satisfy its minimum-count
    /// constraint for one or more clusters; the pipeline run is aborted.
    #[error("most-frequent compression infeasible for cluster(s): {}",
        .0.iter().map(|c| c.describe()).collect::<Vec<_>>().join("; "))]
    CompressionInfeasible(Vec<crate::compress::InfeasibleCluster>),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
