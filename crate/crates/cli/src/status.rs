//! Exit codes and error mapping.

use std::fmt;

use sketchlab::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass = 0,
    Fail = 1,
    Usage = 2,
    Unreachable = 3,
    AcceptanceFloor = 4,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }

    /// Combines two outcomes: any failure wins over the unreachable warning.
    pub fn and(self, other: Status) -> Status {
        match (self, other) {
            (Status::Pass, s) | (s, Status::Pass) => s,
            (Status::Unreachable, s) | (s, Status::Unreachable) => s,
            (s, _) => s,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub status: Status,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            status: Status::Usage,
            message: message.into(),
        }
    }

    pub fn failure(message: impl Into<String>) -> Self {
        Self {
            status: Status::Fail,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::AcceptanceFloor { .. } => Status::AcceptanceFloor,
            Error::InvalidParameter { .. }
            | Error::DimensionMismatch { .. }
            | Error::ShapeMismatch { .. }
            | Error::NonFinite { .. }
            | Error::FrobeniusDomain { .. }
            | Error::MemoryGuard { .. }
            | Error::Format(_) => Status::Usage,
            _ => Status::Fail,
        };
        Self {
            status,
            message: e.to_string(),
        }
    }
}
