use thiserror::Error;

use crate::design::Point;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("design must have at least 2 levels per factor, got {i}x{j}")]
    InvalidSize { i: usize, j: usize },

    #[error("point ({}, {}) lies outside the {i}x{j} design", .point.i, .point.j)]
    PointOutOfRange { point: Point, i: usize, j: usize },

    #[error("point ({}, {}) appears more than once", .0.i, .0.j)]
    DuplicatePoint(Point),

    #[error("table entry at row {row}, column {col} is {value}, expected 0 or 1")]
    NonBinaryEntry { row: usize, col: usize, value: i64 },

    #[error("shape mismatch: expected {expected:?}, got {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("invalid margins: {0}")]
    InvalidMargins(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error("not a k-cycle: {0}")]
    NotACycle(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("cycle degree must be at least 2, got {0}")]
    InvalidDegree(usize),

    #[error("cycle degree {k} out of range 2..={max}")]
    DegreeOutOfRange { k: usize, max: usize },

    #[error("unsupported orthogonal-array strength {0}; expected 1 or 2")]
    UnsupportedStrength(usize),

    #[error("{what} would produce {needed} items, above the cap of {cap}")]
    CapExceeded {
        what: &'static str,
        needed: String,
        cap: u64,
    },

    #[error("Markov basis is empty")]
    EmptyBasis,

    #[error("target weight {0} is not a positive finite number")]
    NonPositiveWeight(f64),

    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
