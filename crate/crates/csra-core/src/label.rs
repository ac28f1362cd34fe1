//! Ternary multi-label annotation shared by training, evaluation, and the
//! label file format.

use crate::error::{Error, Result};

/// One class annotation for one sample.
///
/// `Ignore` marks an unspecified label: treated as negative during training
/// and excluded from every evaluation metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Negative,
    Positive,
    Ignore,
}

impl Label {
    /// Parses the on-disk encoding `{0, 1, -1}`.
    pub fn from_i8(v: i8) -> Result<Self> {
        match v {
            0 => Ok(Label::Negative),
            1 => Ok(Label::Positive),
            -1 => Ok(Label::Ignore),
            _ => Err(Error::InvalidParameter {
                message: format!("label must be 0, 1, or -1, got {v}"),
            }),
        }
    }

    pub fn to_i8(self) -> i8 {
        match self {
            Label::Negative => 0,
            Label::Positive => 1,
            Label::Ignore => -1,
        }
    }

    /// Training target with the ignore-as-negative mapping applied.
    pub fn training_target(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative | Label::Ignore => 0.0,
        }
    }

    pub fn is_ignore(self) -> bool {
        matches!(self, Label::Ignore)
    }
}
