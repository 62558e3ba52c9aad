//! Error types shared by every module in the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A file or text blob did not match its documented schema.
    #[error("parse error: {0}")]
    Parse(String),

    /// The network graph is not a valid radial feeder.
    #[error("topology error: {0}")]
    Topology(String),

    /// A scalar field violates its domain (negative impedance, bad bounds, ...).
    #[error("value error: {0}")]
    Value(String),

    /// Vector or matrix dimensions do not line up.
    #[error("shape error: {0}")]
    Shape(String),

    /// An argument is outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The power-flow solve did not reach tolerance.
    #[error("power flow did not converge")]
    NotConverged,

    /// A learning update was requested with an empty batch.
    #[error("empty batch")]
    EmptyBatch,

    /// NaN or infinity appeared where a finite number is required.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A time index is out of range for the series.
    #[error("index error: {0}")]
    Index(String),

    /// The run configuration is invalid or incomplete.
    #[error("config error: {0}")]
    Config(String),

    /// Summaries cover different evaluation ranges and cannot be compared.
    #[error("range mismatch: {0}")]
    RangeMismatch(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
