//! Floating-point formats supported by the codec.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Bit layout of a supported IEEE-754 element.
///
/// Elements are always little-endian in source byte streams:
/// `sign | exponent | mantissa` from the most significant bit down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FloatFormat {
    Fp32,
    Fp16,
    Bf16,
}

impl FloatFormat {
    pub const fn total_bits(self) -> u32 {
        match self {
            FloatFormat::Fp32 => 32,
            FloatFormat::Fp16 | FloatFormat::Bf16 => 16,
        }
    }

    pub const fn exp_bits(self) -> u32 {
        match self {
            FloatFormat::Fp32 | FloatFormat::Bf16 => 8,
            FloatFormat::Fp16 => 5,
        }
    }

    pub const fn mantissa_bits(self) -> u32 {
        match self {
            FloatFormat::Fp32 => 23,
            FloatFormat::Fp16 => 10,
            FloatFormat::Bf16 => 7,
        }
    }

    pub const fn sign_bits(self) -> u32 {
        1
    }

    pub const fn bytes_per_element(self) -> usize {
        (self.total_bits() / 8) as usize
    }

    /// Bits of the pass-through residue: sign plus mantissa.
    pub const fn residue_bits(self) -> u32 {
        1 + self.mantissa_bits()
    }

    /// One past the largest representable exponent field, `2^E`.
    pub const fn exp_limit(self) -> u16 {
        1 << self.exp_bits()
    }

    /// Format code stored in the container header.
    pub const fn code(self) -> u8 {
        match self {
            FloatFormat::Fp32 => 0,
            FloatFormat::Fp16 => 1,
            FloatFormat::Bf16 => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(FloatFormat::Fp32),
            1 => Ok(FloatFormat::Fp16),
            2 => Ok(FloatFormat::Bf16),
            other => Err(Error::Format(format!("unknown format code {other}"))),
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            FloatFormat::Fp32 => "fp32",
            FloatFormat::Fp16 => "fp16",
            FloatFormat::Bf16 => "bf16",
        }
    }

    /// Display name matching the safetensors dtype convention.
    pub const fn dtype_name(self) -> &'static str {
        match self {
            FloatFormat::Fp32 => "F32",
            FloatFormat::Fp16 => "F16",
            FloatFormat::Bf16 => "BF16",
        }
    }
}

impl FromStr for FloatFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fp32" | "f32" | "float32" => Ok(FloatFormat::Fp32),
            "fp16" | "f16" | "float16" => Ok(FloatFormat::Fp16),
            "bf16" | "bfloat16" => Ok(FloatFormat::Bf16),
            other => Err(Error::Format(format!("unknown dtype `{other}`"))),
        }
    }
}

impl fmt::Display for FloatFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
