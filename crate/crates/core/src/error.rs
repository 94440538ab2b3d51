use thiserror::Error;

use crate::ordering::{Constraint, EventId};

/// Errors raised by the simulator and the ordering library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field contains a non-finite amplitude at flat index {0}")]
    NonFiniteField(usize),

    #[error("field has zero norm")]
    ZeroNorm,

    #[error("field is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("packet clipped by the domain boundary: {0}")]
    PacketClipped(String),

    #[error("under-resolved: {0}")]
    UnderResolved(String),

    #[error("invalid binning: {0}")]
    BadBinning(String),

    #[error("mean energy must be positive, got {0}")]
    NonPositiveEnergy(f64),

    #[error("projection removed every mode")]
    EmptyProjection,

    #[error("propagated field left the usable domain: {0}")]
    DomainExhausted(String),

    #[error("field shapes do not match: {0}")]
    ShapeMismatch(String),

    #[error("unsupported spinor dimension {0}")]
    UnsupportedDimension(usize),

    #[error("rest energy must be positive, got {0}")]
    NonPositiveRestEnergy(f64),

    #[error("spinor has zero norm")]
    ZeroSpinor,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown event {0}")]
    UnknownEvent(EventId),

    #[error("events {0} and {1} belong to different subjects")]
    CrossSubjectSimultaneity(EventId, EventId),

    #[error("events {0} and {1} are not adjacent in local order")]
    AdjacencyViolation(EventId, EventId),

    #[error("message {0} -> {1} stays within one subject; use local order")]
    SameSubjectMessage(EventId, EventId),

    #[error("event log is inconsistent: constraint cycle of length {}", .0.len())]
    InconsistentLog(Vec<Constraint>),

    #[error("clock subject {0:?} has no events")]
    NoClock(String),

    #[error("io: {0}")]
    Io(String),

    #[error("format: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
