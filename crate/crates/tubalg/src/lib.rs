//! File formats, JSON reports and the command-line driver for `tubalg-core`.
//!
//! Tensors are stored as TBT1: the magic `TBT1`, three little-endian `u64`
//! dims `(m, p, n)`, one domain byte (0 real, 1 complex) and the values as
//! little-endian `f64` (pairs for complex) with entry `(i, j, k)` at position
//! `i + m·(j + p·k)`. Transforms are read from CSV rows of `2n` interleaved
//! real/imaginary fields, from TBT1 `n × n × 1` files, or from the names
//! `builtin:dct:N`, `builtin:dft:N`, `builtin:identity:N`.

pub mod cli;
mod error;
pub mod report;
pub mod tbt;
pub mod transform_io;

pub use error::{CliError, FormatError};
