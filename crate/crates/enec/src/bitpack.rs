//! Bit packers and the two-level group classification.
//!
//! Two packers live here:
//!
//! * [`hh_pack`] / [`hh_unpack`] — the hierarchical halving packer used for
//!   mapped exponent codes. Values sit in 16-bit lanes; pairs of lanes are
//!   folded together, doubling the effective width each step, and whenever
//!   the width crosses a byte boundary the low 8 bits of every lane are
//!   extracted ("byte normalization"). The normalized bytes are finally
//!   merged pairwise into little-endian 16-bit words. Output length is
//!   always `ceil(N*a/8)` rounded up to an even byte count.
//! * [`fixed_pack`] / [`fixed_unpack`] — plain LSB-first concatenation for
//!   widths up to 32 bits, used for sign+mantissa residues which exceed the
//!   8-bit lane model of the halving packer.
//!
//! [`group_classify`] splits an array of codes into per-group low bits and
//! per-element overflow bits for anomalous groups, selected by a bitwise OR
//! against the threshold width; [`classify_inverse`] reassembles the codes,
//! deriving overflow offsets from prefix sums over the group mask.

use crate::error::{Error, Result};
use crate::scan::{self, Tile};

/// A byte stream produced by [`hh_pack`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedStream {
    pub bytes: Vec<u8>,
    /// Number of packed values; always a power of two.
    pub element_count: usize,
    /// Bit width of each packed value, 1..=8.
    pub width: u8,
}

/// Exact byte length of a halving-packed stream: `ceil(count*width/8)`
/// rounded up to an even number of bytes.
pub const fn hh_packed_len(count: usize, width: u8) -> usize {
    let bytes = (count * width as usize).div_ceil(8);
    bytes + (bytes & 1)
}

/// Byte length of an LSB-first fixed-width stream, padded to a byte boundary.
pub const fn fixed_packed_len(count: usize, width: u32) -> usize {
    (count * width as usize).div_ceil(8)
}

/// Pack `values` (each below `2^width`) with the hierarchical halving scheme.
///
/// `values.len()` must be a power of two and `width` in 1..=8.
pub fn hh_pack(values: &[u16], width: u8) -> Result<PackedStream> {
    let n = values.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::Shape("halving packer needs a power-of-two element count"));
    }
    if width == 0 || width > 8 {
        return Err(Error::Shape("halving packer width must be in 1..=8"));
    }
    let limit = 1u16 << width;
    if values.iter().any(|&v| v >= limit) {
        return Err(Error::Shape("value does not fit the declared width"));
    }

    let mut data = values.to_vec();
    let mut w = width as i32;
    let mut length = n;
    let mut normalized: Vec<u8> = Vec::with_capacity(hh_packed_len(n, width));

    while w > 0 {
        // Fold lane pairs, doubling the effective width, until a byte
        // boundary is crossed or a single lane remains.
        while length > 1 && w < 8 {
            length /= 2;
            for i in 0..length {
                data[i] |= data[i + length] << w;
            }
            w *= 2;
        }
        // Byte normalization: emit the low 8 bits of every live lane.
        for lane in data.iter_mut().take(length) {
            normalized.push((*lane & 0xFF) as u8);
            *lane >>= 8;
        }
        w -= 8;
    }

    if !normalized.len().is_multiple_of(2) {
        normalized.push(0);
    }

    // Final pairwise fold into little-endian 16-bit words.
    let half = normalized.len() / 2;
    let mut bytes = Vec::with_capacity(normalized.len());
    for i in 0..half {
        bytes.push(normalized[i]);
        bytes.push(normalized[i + half]);
    }

    Ok(PackedStream {
        bytes,
        element_count: n,
        width,
    })
}

/// One outer iteration of the halving fold, as replayed by the unpacker.
struct FoldStep {
    folds: u32,
    /// Lane width right after the folds of this iteration.
    folded_width: i32,
    /// Live lane count at extraction time.
    extract_len: usize,
}

fn fold_plan(n: usize, width: u8) -> (Vec<FoldStep>, usize) {
    let mut steps = Vec::new();
    let mut w = width as i32;
    let mut length = n;
    let mut total = 0usize;
    while w > 0 {
        let mut folds = 0;
        while length > 1 && w < 8 {
            length /= 2;
            folds += 1;
            w *= 2;
        }
        steps.push(FoldStep {
            folds,
            folded_width: w,
            extract_len: length,
        });
        total += length;
        w -= 8;
    }
    (steps, total)
}

/// Invert [`hh_pack`].
pub fn hh_unpack(stream: &PackedStream) -> Result<Vec<u16>> {
    let n = stream.element_count;
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::Shape("halving packer needs a power-of-two element count"));
    }
    if stream.width == 0 || stream.width > 8 {
        return Err(Error::Shape("halving packer width must be in 1..=8"));
    }
    let expected = hh_packed_len(n, stream.width);
    if stream.bytes.len() != expected {
        return Err(Error::Consistency {
            what: "halving-packed stream length",
            expected,
            actual: stream.bytes.len(),
        });
    }

    let (steps, total) = fold_plan(n, stream.width);
    let padded = total + (total & 1);

    // Undo the final pairwise word fold.
    let mut normalized = vec![0u8; padded];
    let half = padded / 2;
    for i in 0..half {
        normalized[i] = stream.bytes[2 * i];
        normalized[i + half] = stream.bytes[2 * i + 1];
    }

    // Replay the outer iterations backwards: re-insert each extracted byte
    // segment, then spread the folded lanes apart again.
    let mut data = vec![0u16; n];
    let mut pos = total;
    for step in steps.iter().rev() {
        pos -= step.extract_len;
        for (lane, &byte) in data.iter_mut().zip(&normalized[pos..pos + step.extract_len]) {
            *lane = (*lane << 8) | byte as u16;
        }
        let mut w = step.folded_width;
        let mut length = step.extract_len;
        for _ in 0..step.folds {
            w /= 2;
            let mask = (1u16 << w) - 1;
            for i in 0..length {
                data[i + length] = data[i] >> w;
                data[i] &= mask;
            }
            length *= 2;
        }
    }

    Ok(data)
}

/// LSB-first fixed-width packing: bit 0 of `values[0]` lands in bit 0 of
/// byte 0. Zero-padded to a byte boundary.
pub fn fixed_pack(values: &[u32], width: u32) -> Result<Vec<u8>> {
    if width == 0 || width > 32 {
        return Err(Error::Shape("fixed packer width must be in 1..=32"));
    }
    if width < 32 {
        let limit = 1u32 << width;
        if values.iter().any(|&v| v >= limit) {
            return Err(Error::Range {
                value: 0,
                bits: width,
            });
        }
    }
    let mut bytes = Vec::with_capacity(fixed_packed_len(values.len(), width));
    match width {
        8 => bytes.extend(values.iter().map(|&v| v as u8)),
        16 => {
            for &v in values {
                bytes.extend_from_slice(&(v as u16).to_le_bytes());
            }
        }
        24 => {
            for &v in values {
                bytes.extend_from_slice(&v.to_le_bytes()[..3]);
            }
        }
        32 => {
            for &v in values {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        _ => {
            let mut acc: u64 = 0;
            let mut filled: u32 = 0;
            for &v in values {
                acc |= (v as u64) << filled;
                filled += width;
                while filled >= 8 {
                    bytes.push((acc & 0xFF) as u8);
                    acc >>= 8;
                    filled -= 8;
                }
            }
            if filled > 0 {
                bytes.push((acc & 0xFF) as u8);
            }
        }
    }
    Ok(bytes)
}

/// Invert [`fixed_pack`] for a known element count.
pub fn fixed_unpack(bytes: &[u8], width: u32, count: usize) -> Result<Vec<u32>> {
    if width == 0 || width > 32 {
        return Err(Error::Shape("fixed packer width must be in 1..=32"));
    }
    let needed = fixed_packed_len(count, width);
    if bytes.len() < needed {
        return Err(Error::Truncation {
            section: "fixed-width stream",
            needed,
            available: bytes.len(),
        });
    }
    let mut out = Vec::with_capacity(count);
    match width {
        8 => out.extend(bytes[..count].iter().map(|&b| b as u32)),
        16 => {
            for ch in bytes[..2 * count].chunks_exact(2) {
                out.push(u16::from_le_bytes([ch[0], ch[1]]) as u32);
            }
        }
        24 => {
            for ch in bytes[..3 * count].chunks_exact(3) {
                out.push(u32::from_le_bytes([ch[0], ch[1], ch[2], 0]));
            }
        }
        32 => {
            for ch in bytes[..4 * count].chunks_exact(4) {
                out.push(u32::from_le_bytes([ch[0], ch[1], ch[2], ch[3]]));
            }
        }
        _ => {
            let mask = (1u64 << width) - 1;
            let mut acc: u64 = 0;
            let mut filled: u32 = 0;
            let mut iter = bytes.iter();
            for _ in 0..count {
                while filled < width {
                    acc |= (*iter.next().expect("length checked") as u64) << filled;
                    filled += 8;
                }
                out.push((acc & mask) as u32);
                acc >>= width;
                filled -= width;
            }
        }
    }
    Ok(out)
}

/// Result of splitting codes into common low bits and anomalous overflow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupClassification {
    /// One bit per group, LSB-first within each byte; 1 marks an anomalous
    /// group whose bitwise OR reaches the threshold.
    pub mask: Vec<u8>,
    pub group_count: usize,
    /// Low `low_width` bits of every code, in element order.
    pub low_bits: Vec<u16>,
    /// High `code_width - low_width` bits of every element belonging to an
    /// anomalous group, in element order.
    pub overflow: Vec<u16>,
}

impl GroupClassification {
    pub fn anomalous_groups(&self) -> usize {
        self.mask.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn group_bit(&self, g: usize) -> bool {
        self.mask[g / 8] >> (g % 8) & 1 == 1
    }
}

/// Classify `codes` into groups of `group_len`, separating the low
/// `low_width` bits of every element and collecting the high bits of
/// anomalous groups.
///
/// A group is anomalous iff the bitwise OR of its codes is `>= 2^low_width`,
/// which is equivalent to (and cheaper than) comparing the group maximum.
pub fn group_classify(
    codes: &[u16],
    group_len: usize,
    low_width: u8,
    code_width: u8,
) -> Result<GroupClassification> {
    if group_len == 0 || !codes.len().is_multiple_of(group_len) {
        return Err(Error::Alignment {
            len: codes.len(),
            group_len,
        });
    }
    debug_assert!(low_width >= 1 && low_width <= code_width && code_width <= 9);
    debug_assert!(codes.iter().all(|&c| (c as u32) < (1u32 << code_width)));

    let group_count = codes.len() / group_len;
    let low_mask = (1u16 << low_width) - 1;
    let mut mask = vec![0u8; group_count.div_ceil(8)];
    let mut low_bits = Vec::with_capacity(codes.len());
    let mut overflow = Vec::new();

    for (g, group) in codes.chunks_exact(group_len).enumerate() {
        let or = group.iter().fold(0u16, |acc, &c| acc | c);
        let anomalous = or > low_mask;
        if anomalous {
            mask[g / 8] |= 1 << (g % 8);
            overflow.extend(group.iter().map(|&c| c >> low_width));
        }
        low_bits.extend(group.iter().map(|&c| c & low_mask));
    }

    Ok(GroupClassification {
        mask,
        group_count,
        low_bits,
        overflow,
    })
}

/// Per-group start offsets into the overflow array, derived from prefix sums
/// over the mask bits computed with the tile scan.
pub(crate) fn overflow_offsets(mask: &[u8], group_count: usize, group_len: usize) -> Vec<usize> {
    let mut lanes: Vec<u16> = (0..group_count)
        .map(|g| (mask[g / 8] >> (g % 8) & 1) as u16)
        .collect();
    let rows = group_count.div_ceil(scan::LANES).next_power_of_two();
    lanes.resize(rows * scan::LANES, 0);
    let tile = Tile::new(rows, lanes).expect("padded tile shape is valid");
    let inclusive = scan::tile_scan(&tile);
    (0..group_count)
        .map(|g| {
            let bit = (mask[g / 8] >> (g % 8) & 1) as usize;
            (inclusive.values()[g] as usize - bit) * group_len
        })
        .collect()
}

/// Invert [`group_classify`]: redistribute overflow bits back onto the low
/// bits. Overflow positions are derived from the mask alone.
pub fn classify_inverse(
    cls: &GroupClassification,
    group_len: usize,
    low_width: u8,
) -> Result<Vec<u16>> {
    if group_len == 0 || !cls.low_bits.len().is_multiple_of(group_len) {
        return Err(Error::Alignment {
            len: cls.low_bits.len(),
            group_len,
        });
    }
    if cls.low_bits.len() != cls.group_count * group_len {
        return Err(Error::Consistency {
            what: "low-bit stream length",
            expected: cls.group_count * group_len,
            actual: cls.low_bits.len(),
        });
    }
    let expected_overflow = cls.anomalous_groups() * group_len;
    if cls.overflow.len() != expected_overflow {
        return Err(Error::Consistency {
            what: "overflow stream length",
            expected: expected_overflow,
            actual: cls.overflow.len(),
        });
    }

    let offsets = overflow_offsets(&cls.mask, cls.group_count, group_len);
    let mut codes = cls.low_bits.clone();
    for (g, &start) in offsets.iter().enumerate() {
        if cls.group_bit(g) {
            let base = g * group_len;
            for j in 0..group_len {
                codes[base + j] |= cls.overflow[start + j] << low_width;
            }
        }
    }
    Ok(codes)
}
