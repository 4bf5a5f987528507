use std::path::PathBuf;

use thiserror::Error;

/// Failure to read a bundle file from disk.
///
/// Parse failures carry the position of the offending record so producers can
/// locate the bad line without re-running the collector.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: required file is missing")]
    Missing { path: PathBuf },
}

/// Domain errors raised by scoring, evaluation and fusion operations.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("unknown entity {0}")]
    UnknownEntity(String),
    #[error("unknown scope {0}")]
    UnknownScope(String),
    #[error("inconsistent counts: {0}")]
    InconsistentCounts(String),
    #[error("no failing test in evidence")]
    NoFailingTest,
    #[error("technique {technique} unavailable: {reason}")]
    TechniqueUnavailable {
        technique: String,
        reason: String,
    },
    #[error("edit script yields an empty ground truth")]
    EmptyGroundTruth,
    #[error("edit references unknown line {module_path}:{line}")]
    UnknownLine { module_path: String, line: u32 },
    #[error("malformed edit: {0}")]
    MalformedEdit(String),
    #[error("granularity mismatch: expected {expected}, found {found}")]
    GranularityMismatch { expected: String, found: String },
    #[error("expected a statement-granularity list, found {0}")]
    NotStatementLevel(String),
    #[error("duplicate entity {0} in suspiciousness list")]
    DuplicateEntity(String),
    #[error("invalid fusion config: {0}")]
    InvalidFusionConfig(String),
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error("kendall tau undefined: {0}")]
    UndefinedTau(String),
    #[error("degenerate wilcoxon test: {0}")]
    DegenerateTest(String),
    #[error("unknown technique {0}")]
    UnknownTechnique(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
