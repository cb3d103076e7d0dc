//! Crate-wide error type.
//!
//! File-format errors carry the location (line, column or byte offset) that
//! triggered them so CLI diagnostics can point at the offending input.

use std::fmt;

#[derive(Debug)]
pub enum Error {
    /// Generic precondition violation.
    InvalidArgument(String),
    /// A vector or matrix dimension does not match what the operation expects.
    LengthMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    /// Example weights sum to zero (or are otherwise unusable).
    DegenerateWeights(&'static str),
    /// An operation that needs at least one row/element received none.
    EmptyInput(&'static str),
    /// CSV row with the wrong number of cells.
    CsvShape {
        line: usize,
        expected: usize,
        got: usize,
    },
    /// A named column is absent from a CSV header.
    MissingColumn(String),
    /// A cell could not be parsed as the required type.
    CellParse {
        line: usize,
        column: usize,
        message: String,
    },
    /// Malformed sparse `index:value` line.
    SparseFormat { line: usize, message: String },
    /// A label name not present in the label universe.
    UnknownLabel { line: usize, label: String },
    /// The hierarchy file contains a cycle; `witness` lists one offending loop.
    HierarchyCycle { witness: Vec<String> },
    /// Binary model file is corrupt or unsupported.
    ModelFormat { offset: usize, message: String },
    Io(std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::LengthMismatch {
                context,
                expected,
                got,
            } => write!(f, "{context}: expected length {expected}, got {got}"),
            Error::DegenerateWeights(ctx) => write!(f, "degenerate weights in {ctx}: sum is zero"),
            Error::EmptyInput(ctx) => write!(f, "empty input: {ctx}"),
            Error::CsvShape {
                line,
                expected,
                got,
            } => write!(
                f,
                "line {line}: expected {expected} cells, got {got} (non-rectangular rows)"
            ),
            Error::MissingColumn(name) => write!(f, "missing column '{name}' in header"),
            Error::CellParse {
                line,
                column,
                message,
            } => write!(f, "line {line}, column {column}: {message}"),
            Error::SparseFormat { line, message } => write!(f, "line {line}: {message}"),
            Error::UnknownLabel { line, label } => {
                write!(f, "line {line}: unknown label '{label}'")
            }
            Error::HierarchyCycle { witness } => {
                write!(f, "hierarchy contains a cycle: {}", witness.join(" -> "))
            }
            Error::ModelFormat { offset, message } => {
                write!(f, "model parse error at byte {offset}: {message}")
            }
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
