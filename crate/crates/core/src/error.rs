use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bisector of a point with itself is undefined: ({x}, {y})")]
    DegeneratePair { x: f64, y: f64 },

    #[error("duplicate sites: {}", format_pairs(.0))]
    DuplicateSites(Vec<(usize, usize)>),

    #[error("point ({x}, {y}) lies outside the diagram domain")]
    OutOfDomain { x: f64, y: f64 },

    #[error("boundary walk left the clip box at ({x}, {y})")]
    ClipEscape { x: f64, y: f64 },

    #[error("boundary walk stalled at ({x}, {y})")]
    WalkStalled { x: f64, y: f64 },

    #[error("index is empty")]
    EmptyIndex,

    #[error("cell id {id} out of range (cell count {count})")]
    OutOfRange { id: u32, count: usize },

    #[error("corrupt cell file at byte offset {offset}: {reason}")]
    Format { offset: u64, reason: String },

    #[error("no valid rows in {0}")]
    NoValidRows(PathBuf),

    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error("algorithms disagree on query seed {seed}: {detail}")]
    Consistency { seed: u64, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_pairs(pairs: &[(usize, usize)]) -> String {
    pairs
        .iter()
        .map(|(a, b)| format!("{a}={b}"))
        .collect::<Vec<_>>()
        .join(", ")
}
