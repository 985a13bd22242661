use std::fmt;
use std::path::Path;

/// Process exit codes.
pub mod exit {
    pub const USAGE: i32 = 2;
    pub const INFEASIBLE: i32 = 3;
    pub const CATALOG_MISS: i32 = 4;
    pub const UPSTREAM: i32 = 5;
}

/// An error carrying the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(exit::USAGE, message)
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        Self::usage(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}
