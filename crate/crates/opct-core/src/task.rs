//! Predictive-modeling task tags.

use crate::error::{Error, Result};
use std::fmt;

/// The six supported prediction tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    /// Single-target regression (one numeric target).
    Str,
    /// Multi-target regression (several numeric targets).
    Mtr,
    /// Binary classification (one 0/1 target).
    Bin,
    /// Multi-class classification (one-hot targets).
    Mcc,
    /// Multi-label classification (binary indicator targets).
    Mlc,
    /// Hierarchical multi-label classification (binary targets + label DAG).
    Hmlc,
}

impl Task {
    pub fn parse(s: &str) -> Result<Task> {
        match s.to_ascii_lowercase().as_str() {
            "str" => Ok(Task::Str),
            "mtr" => Ok(Task::Mtr),
            "bin" => Ok(Task::Bin),
            "mcc" => Ok(Task::Mcc),
            "mlc" => Ok(Task::Mlc),
            "hmlc" => Ok(Task::Hmlc),
            other => Err(Error::InvalidArgument(format!(
                "unknown task '{other}' (expected str|mtr|bin|mcc|mlc|hmlc)"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Task::Str => "str",
            Task::Mtr => "mtr",
            Task::Bin => "bin",
            Task::Mcc => "mcc",
            Task::Mlc => "mlc",
            Task::Hmlc => "hmlc",
        }
    }

    /// Stable one-byte tag used in the binary model formats.
    pub fn tag(&self) -> u8 {
        match self {
            Task::Str => 0,
            Task::Mtr => 1,
            Task::Bin => 2,
            Task::Mcc => 3,
            Task::Mlc => 4,
            Task::Hmlc => 5,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Task> {
        match tag {
            0 => Some(Task::Str),
            1 => Some(Task::Mtr),
            2 => Some(Task::Bin),
            3 => Some(Task::Mcc),
            4 => Some(Task::Mlc),
            5 => Some(Task::Hmlc),
            _ => None,
        }
    }

    pub fn is_classification(&self) -> bool {
        !matches!(self, Task::Str | Task::Mtr)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
