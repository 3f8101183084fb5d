use thiserror::Error;

/// Errors raised by the library's constructors and operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix entry is not finite")]
    NonFinite,
    #[error("invalid polarization state: {0}")]
    InvalidState(String),
    #[error("matrix is not unitary (defect {0:.3e})")]
    NotUnitary(f64),
    #[error("{name} = {value} is outside {allowed}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        allowed: &'static str,
    },
    #[error("protocol {0} has no basis-averaged QBER")]
    NoAveragedQber(crate::rates::ProtocolKind),
    #[error("key rate never changes sign on the search interval")]
    NoCrossing,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("insufficient statistics: {0}")]
    InsufficientStatistics(String),
    #[error("tallies were produced with different source/detector configurations")]
    MismatchedTallies,
    #[error("malformed tally file, line {line}: {msg}")]
    TallyFormat { line: usize, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
