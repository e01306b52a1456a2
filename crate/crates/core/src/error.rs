use std::io;

use thiserror::Error;

/// Errors produced by the memory, network, data, and orchestration layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParams { name: &'static str, reason: String },

    #[error("no slot carries label {0}")]
    EmptyCandidateSet(u8),

    #[error("memory holds no real slot with positive mass")]
    NoRealSlots,

    #[error("histogram entry for slot {slot} became non-positive ({value})")]
    DegenerateHistogram { slot: usize, value: f64 },

    #[error("forward cache does not belong to this network")]
    CacheMismatch,

    #[error("shape mismatch: expected {expected} parameters, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("bad IDX magic number {0:#010x}")]
    BadMagic(u32),

    #[error("truncated file: {0}")]
    TruncatedFile(String),

    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("incompatible checkpoint: {0}")]
    IncompatibleCheckpoint(String),

    #[error("need at least {needed} real slots, memory has {found}")]
    InsufficientRealSlots { needed: usize, found: usize },

    #[error("duplicate slot indices: {0:?}")]
    DuplicateSlots(Vec<usize>),

    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),

    #[error("serialization failure: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv failure: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
