//! Split floating-point streams into exponents and sign+mantissa residues.
//!
//! No value interpretation happens here: NaN, infinity, denormal and zero
//! patterns pass through as raw field bits, which is what makes the whole
//! pipeline lossless. Per element the residue field is the sign bit followed
//! by the mantissa (most significant first), i.e. `(sign << mantissa_bits) |
//! mantissa`; residue fields are concatenated LSB-first and zero-padded to a
//! byte boundary.

use crate::bitpack;
use crate::error::{Error, Result};
use crate::format::FloatFormat;

/// Exponent lanes plus the packed residue stream of one byte sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPayload {
    /// One exponent field per element, each below `2^E`.
    pub exponents: Vec<u16>,
    /// Bit-packed sign+mantissa fields, `1 + mantissa_bits` per element.
    pub residue: Vec<u8>,
    pub element_count: usize,
}

/// Extract exponent and residue streams from raw little-endian elements.
pub fn split(raw: &[u8], fmt: FloatFormat) -> Result<SplitPayload> {
    let elem = fmt.bytes_per_element();
    if !raw.len().is_multiple_of(elem) {
        return Err(Error::Length {
            len: raw.len(),
            elem_bytes: elem,
        });
    }
    let count = raw.len() / elem;
    let mut exponents = Vec::with_capacity(count);
    let mut residue = Vec::with_capacity(bitpack::fixed_packed_len(count, fmt.residue_bits()));

    // Residue fields are emitted straight into their packed form (the byte
    // stream matches `fixed_pack` of the per-element values exactly).
    match fmt {
        FloatFormat::Bf16 => {
            for ch in raw.chunks_exact(2) {
                let bits = u16::from_le_bytes([ch[0], ch[1]]);
                exponents.push((bits >> 7) & 0xFF);
                residue.push((((bits >> 8) & 0x80) | (bits & 0x7F)) as u8);
            }
        }
        FloatFormat::Fp16 => {
            let mut acc: u32 = 0;
            let mut filled: u32 = 0;
            for ch in raw.chunks_exact(2) {
                let bits = u16::from_le_bytes([ch[0], ch[1]]);
                exponents.push((bits >> 10) & 0x1F);
                let field = ((bits >> 5) & 0x400) | (bits & 0x3FF);
                acc |= (field as u32) << filled;
                filled += 11;
                while filled >= 8 {
                    residue.push((acc & 0xFF) as u8);
                    acc >>= 8;
                    filled -= 8;
                }
            }
            if filled > 0 {
                residue.push((acc & 0xFF) as u8);
            }
        }
        FloatFormat::Fp32 => {
            for ch in raw.chunks_exact(4) {
                let bits = u32::from_le_bytes([ch[0], ch[1], ch[2], ch[3]]);
                exponents.push(((bits >> 23) & 0xFF) as u16);
                let field = ((bits >> 8) & 0x80_0000) | (bits & 0x7F_FFFF);
                residue.extend_from_slice(&field.to_le_bytes()[..3]);
            }
        }
    }

    Ok(SplitPayload {
        exponents,
        residue,
        element_count: count,
    })
}

/// Reassemble the original byte sequence from a [`SplitPayload`].
pub fn combine(payload: &SplitPayload, fmt: FloatFormat) -> Result<Vec<u8>> {
    let count = payload.element_count;
    if payload.exponents.len() != count {
        return Err(Error::Consistency {
            what: "exponent stream length",
            expected: count,
            actual: payload.exponents.len(),
        });
    }
    let residue_len = bitpack::fixed_packed_len(count, fmt.residue_bits());
    if payload.residue.len() != residue_len {
        return Err(Error::Consistency {
            what: "residue stream length",
            expected: residue_len,
            actual: payload.residue.len(),
        });
    }
    let exp_limit = fmt.exp_limit();
    if let Some(&bad) = payload.exponents.iter().find(|&&e| e >= exp_limit) {
        return Err(Error::Range {
            value: bad,
            bits: fmt.exp_bits(),
        });
    }

    let residues = if count == 0 {
        Vec::new()
    } else {
        bitpack::fixed_unpack(&payload.residue, fmt.residue_bits(), count)?
    };
    let mant = fmt.mantissa_bits();
    let mut out = Vec::with_capacity(count * fmt.bytes_per_element());

    match fmt {
        FloatFormat::Bf16 | FloatFormat::Fp16 => {
            for (&exp, &res) in payload.exponents.iter().zip(&residues) {
                let sign = (res >> mant) as u16;
                let mantissa = (res as u16) & ((1 << mant) - 1);
                let bits = (sign << 15) | (exp << mant) | mantissa;
                out.extend_from_slice(&bits.to_le_bytes());
            }
        }
        FloatFormat::Fp32 => {
            for (&exp, &res) in payload.exponents.iter().zip(&residues) {
                let sign = res >> 23;
                let mantissa = res & 0x7F_FFFF;
                let bits = (sign << 31) | ((exp as u32) << 23) | mantissa;
                out.extend_from_slice(&bits.to_le_bytes());
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bf16_one_point_zero() {
        // 1.0 in bf16 is 0x3F80: exponent 127, sign 0, mantissa 0.
        let payload = split(&0x3F80u16.to_le_bytes(), FloatFormat::Bf16).unwrap();
        assert_eq!(payload.exponents, vec![127]);
        assert_eq!(payload.residue, vec![0]);
        assert_eq!(payload.element_count, 1);
        assert_eq!(
            combine(&payload, FloatFormat::Bf16).unwrap(),
            vec![0x80, 0x3F]
        );
    }

    #[test]
    fn empty_input_is_identity() {
        let payload = split(&[], FloatFormat::Fp32).unwrap();
        assert_eq!(payload.element_count, 0);
        assert!(payload.exponents.is_empty());
        assert!(payload.residue.is_empty());
        assert_eq!(combine(&payload, FloatFormat::Fp32).unwrap(), Vec::<u8>::new());
    }

    #[test]
    fn nan_pattern_survives() {
        // Exponent 255 with mantissa 0x7F reassembles to the NaN bits 0x7FFF.
        let payload = SplitPayload {
            exponents: vec![255],
            residue: vec![0x7F],
            element_count: 1,
        };
        assert_eq!(
            combine(&payload, FloatFormat::Bf16).unwrap(),
            0x7FFFu16.to_le_bytes()
        );
    }

    #[test]
    fn misaligned_input_rejected() {
        assert!(matches!(
            split(&[0u8; 3], FloatFormat::Bf16),
            Err(Error::Length { .. })
        ));
        assert!(matches!(
            split(&[0u8; 6], FloatFormat::Fp32),
            Err(Error::Length { .. })
        ));
    }

    #[test]
    fn combine_rejects_inconsistent_lengths() {
        let payload = SplitPayload {
            exponents: vec![1, 2],
            residue: vec![0],
            element_count: 2,
        };
        assert!(matches!(
            combine(&payload, FloatFormat::Bf16),
            Err(Error::Consistency { .. })
        ));
    }

    #[test]
    fn round_trip_random_all_formats() {
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut bytes = Vec::with_capacity(4096);
        for _ in 0..1024 {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            bytes.extend_from_slice(&(state as u32).to_le_bytes());
        }
        for fmt in [FloatFormat::Bf16, FloatFormat::Fp16, FloatFormat::Fp32] {
            let payload = split(&bytes, fmt).unwrap();
            assert_eq!(combine(&payload, fmt).unwrap(), bytes, "{fmt}");
        }
    }

    #[test]
    fn fp16_residue_is_eleven_bits() {
        let bytes = [0xFFu8, 0xFF, 0x00, 0x80];
        let payload = split(&bytes, FloatFormat::Fp16).unwrap();
        assert_eq!(payload.exponents, vec![31, 0]);
        assert_eq!(payload.residue.len(), bitpack::fixed_packed_len(2, 11));
        assert_eq!(combine(&payload, FloatFormat::Fp16).unwrap(), bytes);
    }
}
