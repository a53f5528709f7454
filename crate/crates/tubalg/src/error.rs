use std::path::PathBuf;

use thiserror::Error;

/// A file that could not be decoded; offsets are in bytes from the start.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("byte 0: bad magic {found:?}, expected \"TBT1\"")]
    BadMagic { found: Vec<u8> },
    #[error("byte {offset}: unexpected end of file while reading {what} ({needed} bytes needed, {available} available)")]
    Truncated {
        offset: usize,
        what: &'static str,
        needed: usize,
        available: usize,
    },
    #[error("byte {offset}: invalid domain flag {flag}, expected 0 or 1")]
    BadFlag { offset: usize, flag: u8 },
    #[error("byte {offset}: dimensions {dims:?} overflow the address space")]
    Overflow { offset: usize, dims: (u64, u64, u64) },
    #[error("byte {offset}: {extra} trailing bytes after the last value")]
    Trailing { offset: usize, extra: usize },
    #[error("byte {offset}: {message}")]
    Csv { offset: u64, message: String },
    #[error("a transform must be stored as n x n x 1, got {0:?}")]
    NotSquare((usize, usize, usize)),
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Format { path: PathBuf, source: FormatError },
    #[error(transparent)]
    Core(#[from] tubalg_core::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// 1 for unreadable or malformed files, 2 for rejected inputs.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Format { .. } => 1,
            CliError::Core(_) | CliError::Usage(_) => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
