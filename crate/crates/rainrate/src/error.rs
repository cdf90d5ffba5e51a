//! Failure classes and their process exit codes.

use std::fmt;
use std::path::Path;

use rainrate_core::Error as CoreError;

/// Process exit status per failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitClass {
    /// Bad flags or parameter values.
    Usage = 2,
    /// Unreadable, unwritable or malformed files.
    Io = 3,
    /// Training or numerical breakdown.
    Numerical = 4,
}

#[derive(Debug)]
pub struct CliError {
    pub class: ExitClass,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { class: ExitClass::Usage, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError { class: ExitClass::Io, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        CliError { class: ExitClass::Numerical, message: message.into() }
    }

    pub fn file(path: &Path, err: impl fmt::Display) -> Self {
        Self::io(format!("{}: {err}", path.display()))
    }

    /// Malformed content at a 1-based line of `path`.
    pub fn parse(path: &Path, line: usize, err: impl fmt::Display) -> Self {
        Self::io(format!("{}:{line}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        self.class as i32
    }

    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let class = match e {
            CoreError::InvalidInput(_) => ExitClass::Usage,
            CoreError::Numerical(_) | CoreError::Training(_) => ExitClass::Numerical,
        };
        CliError { class, message: e.to_string() }
    }
}

pub type CliResult<T> = Result<T, CliError>;
