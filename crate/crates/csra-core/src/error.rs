//! Error type shared by all modules of the crate.

use std::fmt;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors emitted by tensor math, attention ops, training, metrics, and file I/O.
#[derive(Debug)]
pub enum Error {
    /// Two operands (or an operand and a declared shape) do not line up.
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    /// A scalar or configuration value is outside its valid range.
    InvalidParameter { message: String },
    /// A class or location index is out of range.
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    /// A classifier row has (near-)zero norm and cannot be normalized.
    DegenerateClassifier { row: usize, norm: f64 },
    /// Training produced a non-finite loss.
    Divergence { epoch: usize, batch: usize },
    /// A binary tensor file is malformed; `offset` is the byte position of the problem.
    Format { offset: u64, message: String },
    /// A label file line could not be parsed.
    LabelFormat { line: usize, message: String },
    /// A model file is structurally valid but does not describe a model.
    InvalidModel { message: String },
    /// Underlying I/O failure.
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch { op, left, right } => {
                write!(f, "shape mismatch in {op}: left={left:?}, right={right:?}")
            }
            Error::InvalidParameter { message } => write!(f, "invalid parameter: {message}"),
            Error::IndexOutOfRange { what, index, len } => {
                write!(f, "{what} index {index} out of range (length {len})")
            }
            Error::DegenerateClassifier { row, norm } => {
                write!(f, "classifier row {row} has degenerate norm {norm:e}")
            }
            Error::Divergence { epoch, batch } => {
                write!(f, "training diverged (non-finite loss) at epoch {epoch}, batch {batch}")
            }
            Error::Format { offset, message } => {
                write!(f, "format error at byte {offset}: {message}")
            }
            Error::LabelFormat { line, message } => {
                write!(f, "label file error at line {line}: {message}")
            }
            Error::InvalidModel { message } => write!(f, "invalid model file: {message}"),
            Error::Io(e) => write!(f, "i/o error: {e}"),
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
