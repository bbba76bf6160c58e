//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the codec, the analysis passes and the loaders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input length {len} is not a multiple of the {elem_bytes}-byte element size")]
    Length { len: usize, elem_bytes: usize },

    #[error("{what}: expected {expected}, found {actual}")]
    Consistency {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("empty input")]
    EmptyInput,

    #[error("exponent {value} does not fit in {bits} bits")]
    Range { value: u16, bits: u32 },

    #[error("need at least two distinct exponents")]
    DegenerateInput,

    #[error("exponent {exponent} is outside the mapping window of (b={b}, n={n})")]
    Window { exponent: u16, b: u16, n: u8 },

    #[error("length {len} is not a multiple of the group length {group_len}")]
    Alignment { len: usize, group_len: usize },

    #[error("invalid shape: {0}")]
    Shape(&'static str),

    #[error("bad magic {0:02x?}, not an ENEC container")]
    Magic([u8; 4]),

    #[error("unsupported container version {0}")]
    Version(u16),

    #[error("payload checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    Checksum { stored: u32, computed: u32 },

    #[error("truncated container: section `{section}` needs {needed} bytes, {available} available")]
    Truncation {
        section: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("reconstruction mismatch at byte offset {offset}")]
    Mismatch { offset: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed safetensors header: {0}")]
    Header(String),

    #[error("bad data range for tensor `{tensor}`: {reason}")]
    Offset { tensor: String, reason: String },

    #[error("tensor `{tensor}` has unsupported dtype {dtype}")]
    UnsupportedDtype { tensor: String, dtype: String },
}

pub type Result<T> = std::result::Result<T, Error>;
