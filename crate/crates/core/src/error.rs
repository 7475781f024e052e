use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("no uncensored observations")]
    NoUncensored,

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("starting point lies outside the parameter box")]
    StartOutsideBox,

    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("kernel `{kernel}` cannot handle this instrument layout: {reason}")]
    KernelUnsupported {
        kernel: &'static str,
        reason: String,
    },

    #[error(
        "bootstrap replicate {replicate}: {redraws} consecutive resamples without uncensored rows"
    )]
    ResampleExhausted { replicate: usize, redraws: usize },

    #[error("{failed} of {total} Monte Carlo replications failed (first error: {first})")]
    ReplicationFailures {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error("column {column} is not binary at row {row}")]
    NonBinaryColumn { column: usize, row: usize },
}
