use std::io;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("prime index {n} is beyond the supported range (max {max}); pass the override to go further")]
    IndexOutOfRange { n: usize, max: usize },

    #[error("omega(n) is undefined for n = {n}; use h(1) = 2 instead")]
    OmegaUndefined { n: usize },

    #[error("{algo} refuses n = {n}: {reason}")]
    Guard {
        algo: &'static str,
        n: usize,
        reason: String,
    },

    #[error("residue {r} is the zero class modulo {p}")]
    ZeroResidue { r: u32, p: u32 },

    #[error("coverage array capacity of {capacity} positions is exhausted")]
    CapacityExhausted { capacity: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid sequence record: {0}")]
    InvalidRecord(String),

    #[error("invalid solution: {0}")]
    InvalidSolution(String),

    #[error("work unit file is stale: {0}")]
    StaleUnits(String),

    #[error("work unit {unit_id} failed twice: {msg}")]
    UnitFailed { unit_id: usize, msg: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
