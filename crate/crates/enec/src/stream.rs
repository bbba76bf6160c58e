//! The block-parallel container codec and the `.enec` byte layout.
//!
//! Container layout (all integers little-endian):
//!
//! ```text
//! header, 20 bytes:
//!   0..4    magic "ENEC"
//!   4..6    version (u16) = 1
//!   6       format code (u8): 0 = fp32, 1 = fp16, 2 = bf16
//!   7       flags (u8), reserved
//!   8..12   block size in elements (u32)
//!   12..16  tensor count (u32)
//!   16..20  CRC-32 (u32) of every byte after the header
//! tensor table, per tensor:
//!   name length (u16), name bytes (UTF-8)
//!   element count (u64)
//!   b (u8), n (u8), m (u8), group length (u16)
//!   block directory, ceil(element_count / block_size) entries:
//!     payload offset (u64, relative to the payload section)
//!     payload size (u32)
//!     flags (u8): bit 0 = raw fallback
//! payload section: concatenated block payloads
//! ```
//!
//! A coded block payload is five back-to-back sections, each length
//! derivable from `(block element count, L, m, n, mask popcount, format)`:
//!
//! ```text
//! mask      ceil(G/8) bytes, G = padded / L groups, one bit per group
//! low       halving-packed low m bits of all padded codes
//! count     u32, number of anomalous groups
//! overflow  high (n - m) bits of the L * count anomalous elements,
//!           halving-packed in descending power-of-two pieces following the
//!           binary decomposition of L * count; absent when count = 0
//! residue   LSB-first sign+mantissa fields of the true elements
//! ```
//!
//! `padded = max(L, next_power_of_two(true element count))`: a tail block is
//! zero-padded up to the packer's power-of-two shape and truncated again on
//! decode using the element count from the tensor record.
//!
//! A block is stored raw (directory flag bit 0) when its exponents fall
//! outside the mapping window of the tensor's parameters — coded output is
//! then impossible — or when coding would not shrink it. This keeps the
//! codec lossless over arbitrary inputs, including parameters transferred
//! from a different model. Output bytes are a pure function of
//! `(input, format, params, block size)`; the worker count never changes
//! them, only how block work is distributed.

use crate::analysis::ExponentHistogram;
use crate::bitpack::{self, GroupClassification, PackedStream};
use crate::error::{Error, Result};
use crate::format::FloatFormat;
use crate::fpsplit::{self, SplitPayload};
use crate::transform;
use crate::tuner::{self, TunedParams};

pub const MAGIC: [u8; 4] = *b"ENEC";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 20;
pub const DEFAULT_BLOCK_SIZE: u32 = 16_384;
/// Upper bound keeping per-block group counts inside 16-bit scan lanes.
pub const MAX_BLOCK_SIZE: u32 = 1 << 19;

const RAW_FLAG: u8 = 1;

/// One named tensor to compress into a container.
#[derive(Debug, Clone, Copy)]
pub struct TensorInput<'a> {
    pub name: &'a str,
    pub data: &'a [u8],
}

/// Compression knobs. `workers = 0` uses all available cores; `params =
/// None` tunes per tensor from the exponent histogram.
#[derive(Debug, Clone)]
pub struct CompressOptions {
    pub block_size: u32,
    pub params: Option<TunedParams>,
    pub workers: usize,
}

impl Default for CompressOptions {
    fn default() -> Self {
        CompressOptions {
            block_size: DEFAULT_BLOCK_SIZE,
            params: None,
            workers: 0,
        }
    }
}

/// Ratio accounting for one compress/verify/reference run.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    pub original_bytes: u64,
    pub compressed_bytes: u64,
    pub compression_ratio: f64,
    /// Measured coded exponent bits (mask, low, count and overflow sections)
    /// per element, over all coded blocks.
    pub exponent_bits_per_element: f64,
    /// Expected-bits prediction of the ratio from the exponent histogram.
    pub formula_ratio: f64,
}

/// Parsed directory entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockInfo {
    pub offset: u64,
    pub size: u32,
    pub flags: u8,
}

impl BlockInfo {
    pub fn is_raw(&self) -> bool {
        self.flags & RAW_FLAG != 0
    }
}

/// Parsed tensor record.
#[derive(Debug, Clone)]
pub struct TensorInfo {
    pub name: String,
    pub element_count: u64,
    pub params: TunedParams,
    pub blocks: Vec<BlockInfo>,
}

/// Parsed container metadata (no payload decoding).
#[derive(Debug, Clone)]
pub struct ContainerInfo {
    pub format: FloatFormat,
    pub block_size: u32,
    pub tensors: Vec<TensorInfo>,
    pub table_len: usize,
    pub payload_len: usize,
}

// ---------------------------------------------------------------------------
// Worker dispatch
// ---------------------------------------------------------------------------

#[cfg(feature = "parallel")]
fn map_indexed<T, R, F>(items: Vec<T>, workers: usize, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(usize, T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    // More workers than cores only adds scheduler churn; results are
    // order-collected so the count never changes the output bytes.
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    match workers.min(cores) {
        1 => items.into_iter().enumerate().map(|(i, t)| f(i, t)).collect(),
        0 => items.into_par_iter().enumerate().map(|(i, t)| f(i, t)).collect(),
        w => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .expect("worker pool");
            pool.install(|| items.into_par_iter().enumerate().map(|(i, t)| f(i, t)).collect())
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn map_indexed<T, R, F>(items: Vec<T>, _workers: usize, f: F) -> Vec<R>
where
    F: Fn(usize, T) -> R,
{
    items.into_iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

// ---------------------------------------------------------------------------
// Compression
// ---------------------------------------------------------------------------

fn check_block_size(block_size: u32) -> Result<()> {
    if block_size < 16 || !block_size.is_multiple_of(16) || block_size > MAX_BLOCK_SIZE {
        return Err(Error::Format(format!(
            "block size {block_size} must be a multiple of 16 in 16..={MAX_BLOCK_SIZE}"
        )));
    }
    Ok(())
}

/// Exponent histogram of an element-aligned byte stream.
pub fn exponent_histogram(
    raw: &[u8],
    fmt: FloatFormat,
    workers: usize,
) -> Result<ExponentHistogram> {
    let elem = fmt.bytes_per_element();
    if !raw.len().is_multiple_of(elem) {
        return Err(Error::Length {
            len: raw.len(),
            elem_bytes: elem,
        });
    }
    if raw.is_empty() {
        return Err(Error::EmptyInput);
    }
    // Coarse chunks keep the merge cheap while letting workers share the scan.
    let chunk = 1 << 23;
    let chunks: Vec<&[u8]> = raw.chunks(chunk - chunk % elem).collect();
    let partial = map_indexed(chunks, workers, |_, slice| {
        let payload = fpsplit::split(slice, fmt).expect("chunk stays element-aligned");
        let mut counts = vec![0u64; fmt.exp_limit() as usize];
        for e in payload.exponents {
            counts[e as usize] += 1;
        }
        counts
    });
    let mut counts = vec![0u64; fmt.exp_limit() as usize];
    for part in partial {
        for (acc, c) in counts.iter_mut().zip(part) {
            *acc += c;
        }
    }
    ExponentHistogram::from_counts(counts, fmt.exp_bits())
}

fn padded_count(true_n: usize, group_len: usize) -> usize {
    true_n.next_power_of_two().max(group_len)
}

fn encode_block(block: &[u8], fmt: FloatFormat, params: &TunedParams) -> (u8, Vec<u8>) {
    let coded = try_encode_block(block, fmt, params);
    match coded {
        Some(bytes) if bytes.len() < block.len() => (0, bytes),
        _ => (RAW_FLAG, block.to_vec()),
    }
}

fn try_encode_block(block: &[u8], fmt: FloatFormat, params: &TunedParams) -> Option<Vec<u8>> {
    let payload = fpsplit::split(block, fmt).expect("blocks are element-aligned");
    let (b, n, m) = (params.b, params.n, params.m);
    let group_len = params.group_len as usize;
    if !payload
        .exponents
        .iter()
        .all(|&x| transform::window_contains(b, n, x))
    {
        return None;
    }

    let true_n = payload.element_count;
    let padded = padded_count(true_n, group_len);
    let mut codes = payload.exponents;
    transform::forward_map_batch(&mut codes, b, n);
    codes.resize(padded, 0);

    let cls = bitpack::group_classify(&codes, group_len, m, n).expect("padded to group multiple");
    let low = bitpack::hh_pack(&cls.low_bits, m).expect("padded count is a power of two");
    let anomalous = cls.anomalous_groups();

    let mut out = Vec::with_capacity(
        cls.mask.len() + low.bytes.len() + 4 + payload.residue.len() + 64,
    );
    out.extend_from_slice(&cls.mask);
    out.extend_from_slice(&low.bytes);
    out.extend_from_slice(&(anomalous as u32).to_le_bytes());
    let mut start = 0;
    for piece in pow2_pieces(cls.overflow.len()) {
        let packed = bitpack::hh_pack(&cls.overflow[start..start + piece], n - m)
            .expect("pieces are power-of-two");
        out.extend_from_slice(&packed.bytes);
        start += piece;
    }
    out.extend_from_slice(&payload.residue);
    Some(out)
}

/// Descending power-of-two pieces summing to `total` (a multiple of 16), the
/// shapes the halving packer accepts without padding.
fn pow2_pieces(total: usize) -> impl Iterator<Item = usize> {
    debug_assert!(total.is_multiple_of(16));
    (0..usize::BITS)
        .rev()
        .map(|bit| 1usize << bit)
        .filter(move |piece| total & piece != 0)
}

fn decode_block(
    payload: &[u8],
    fmt: FloatFormat,
    params: &TunedParams,
    true_n: usize,
    flags: u8,
) -> Result<Vec<u8>> {
    let elem = fmt.bytes_per_element();
    if flags & RAW_FLAG != 0 {
        if payload.len() != true_n * elem {
            return Err(Error::Truncation {
                section: "raw block",
                needed: true_n * elem,
                available: payload.len(),
            });
        }
        return Ok(payload.to_vec());
    }

    let (b, n, m) = (params.b, params.n, params.m);
    let group_len = params.group_len as usize;
    let padded = padded_count(true_n, group_len);
    let groups = padded / group_len;
    let mut cursor = 0usize;

    let take = |cursor: &mut usize, len: usize, section: &'static str| -> Result<&[u8]> {
        let end = *cursor + len;
        if end > payload.len() {
            return Err(Error::Truncation {
                section,
                needed: len,
                available: payload.len() - *cursor,
            });
        }
        let slice = &payload[*cursor..end];
        *cursor = end;
        Ok(slice)
    };

    let mask = take(&mut cursor, groups.div_ceil(8), "block mask")?.to_vec();
    let low_bytes = take(
        &mut cursor,
        bitpack::hh_packed_len(padded, m),
        "low-bit stream",
    )?;
    let low_bits = bitpack::hh_unpack(&PackedStream {
        bytes: low_bytes.to_vec(),
        element_count: padded,
        width: m,
    })?;

    let count_bytes = take(&mut cursor, 4, "overflow count")?;
    let count = u32::from_le_bytes(count_bytes.try_into().unwrap()) as usize;
    let mask_popcount: usize = mask.iter().map(|b| b.count_ones() as usize).sum();
    if count != mask_popcount || count > groups {
        return Err(Error::Consistency {
            what: "anomalous group count",
            expected: mask_popcount,
            actual: count,
        });
    }

    let overflow = if count > 0 {
        if m == n {
            return Err(Error::Format(
                "anomalous groups recorded with zero overflow width".into(),
            ));
        }
        let total = group_len * count;
        let mut values = Vec::with_capacity(total);
        for piece in pow2_pieces(total) {
            let bytes = take(
                &mut cursor,
                bitpack::hh_packed_len(piece, n - m),
                "overflow stream",
            )?;
            values.extend(bitpack::hh_unpack(&PackedStream {
                bytes: bytes.to_vec(),
                element_count: piece,
                width: n - m,
            })?);
        }
        values
    } else {
        Vec::new()
    };

    let residue = take(
        &mut cursor,
        bitpack::fixed_packed_len(true_n, fmt.residue_bits()),
        "residue stream",
    )?
    .to_vec();
    if cursor != payload.len() {
        return Err(Error::Consistency {
            what: "block payload size",
            expected: cursor,
            actual: payload.len(),
        });
    }

    let cls = GroupClassification {
        mask,
        group_count: groups,
        low_bits,
        overflow,
    };
    let mut codes = bitpack::classify_inverse(&cls, group_len, m)?;
    codes.truncate(true_n);
    transform::inverse_map_batch(&mut codes, b, n);

    fpsplit::combine(
        &SplitPayload {
            exponents: codes,
            residue,
            element_count: true_n,
        },
        fmt,
    )
}

/// Compress one unnamed tensor.
pub fn compress(raw: &[u8], fmt: FloatFormat, opts: &CompressOptions) -> Result<Vec<u8>> {
    compress_tensors(&[TensorInput { name: "", data: raw }], fmt, opts)
}

/// Compress a set of named tensors into one container.
pub fn compress_tensors(
    tensors: &[TensorInput],
    fmt: FloatFormat,
    opts: &CompressOptions,
) -> Result<Vec<u8>> {
    check_block_size(opts.block_size)?;
    if tensors.len() > u32::MAX as usize {
        return Err(Error::Format("too many tensors".into()));
    }
    let elem = fmt.bytes_per_element();
    let block_bytes = opts.block_size as usize * elem;

    struct Encoded {
        name_len: usize,
        element_count: u64,
        params: TunedParams,
        blocks: Vec<(u8, Vec<u8>)>,
    }

    let mut encoded = Vec::with_capacity(tensors.len());
    for t in tensors {
        if t.name.len() > u16::MAX as usize {
            return Err(Error::Format(format!("tensor name `{}…` too long", &t.name[..32])));
        }
        if t.data.len() % elem != 0 {
            return Err(Error::Length {
                len: t.data.len(),
                elem_bytes: elem,
            });
        }
        let params = match opts.params {
            Some(p) => p,
            None if t.data.is_empty() => TunedParams { b: 0, n: 1, m: 1, group_len: 16 },
            None => {
                let hist = exponent_histogram(t.data, fmt, opts.workers)?;
                tuner::tune(&hist, &tuner::default_group_lengths(opts.block_size))
            }
        };
        params.validate(fmt, opts.block_size)?;

        let chunks: Vec<&[u8]> = t.data.chunks(block_bytes).collect();
        let blocks = map_indexed(chunks, opts.workers, |_, block| {
            encode_block(block, fmt, &params)
        });
        encoded.push(Encoded {
            name_len: t.name.len(),
            element_count: (t.data.len() / elem) as u64,
            params,
            blocks,
        });
    }

    // Assemble header and table, then scatter block payloads into their
    // final positions on the workers (first-touch faults stay parallel).
    let table_len: usize = tensors
        .iter()
        .zip(&encoded)
        .map(|(t, e)| 2 + t.name.len() + 8 + 5 + 13 * e.blocks.len())
        .sum();
    let payload_len: usize = encoded
        .iter()
        .flat_map(|e| e.blocks.iter().map(|(_, b)| b.len()))
        .sum();
    let mut out = vec![0u8; HEADER_LEN + table_len + payload_len];
    out[0..4].copy_from_slice(&MAGIC);
    out[4..6].copy_from_slice(&VERSION.to_le_bytes());
    out[6] = fmt.code();
    out[7] = 0; // header flags
    out[8..12].copy_from_slice(&opts.block_size.to_le_bytes());
    out[12..16].copy_from_slice(&(tensors.len() as u32).to_le_bytes());
    // CRC patched below.

    let mut cursor = HEADER_LEN;
    let mut put = |out: &mut Vec<u8>, bytes: &[u8]| {
        out[cursor..cursor + bytes.len()].copy_from_slice(bytes);
        cursor += bytes.len();
    };
    let mut offset = 0u64;
    for (t, e) in tensors.iter().zip(&encoded) {
        put(&mut out, &(e.name_len as u16).to_le_bytes());
        put(&mut out, t.name.as_bytes());
        put(&mut out, &e.element_count.to_le_bytes());
        put(&mut out, &[e.params.b as u8, e.params.n, e.params.m]);
        put(&mut out, &(e.params.group_len as u16).to_le_bytes());
        for (flags, bytes) in &e.blocks {
            put(&mut out, &offset.to_le_bytes());
            put(&mut out, &(bytes.len() as u32).to_le_bytes());
            put(&mut out, &[*flags]);
            offset += bytes.len() as u64;
        }
    }

    let all_blocks: Vec<&Vec<u8>> = encoded
        .iter()
        .flat_map(|e| e.blocks.iter().map(|(_, b)| b))
        .collect();
    let (_, mut payload_region) = out.split_at_mut(HEADER_LEN + table_len);
    let mut jobs = Vec::with_capacity(all_blocks.len());
    for bytes in all_blocks {
        let (dst, rest) = payload_region.split_at_mut(bytes.len());
        payload_region = rest;
        jobs.push((dst, bytes));
    }
    map_indexed(jobs, opts.workers, |_, (dst, bytes)| {
        dst.copy_from_slice(bytes);
    });

    let crc = crc32fast::hash(&out[HEADER_LEN..]);
    out[16..20].copy_from_slice(&crc.to_le_bytes());
    Ok(out)
}

// ---------------------------------------------------------------------------
// Decompression
// ---------------------------------------------------------------------------

struct Parsed<'a> {
    info: ContainerInfo,
    payload: &'a [u8],
}

fn parse(file: &[u8]) -> Result<Parsed<'_>> {
    if file.len() < HEADER_LEN {
        return Err(Error::Truncation {
            section: "file header",
            needed: HEADER_LEN,
            available: file.len(),
        });
    }
    let magic: [u8; 4] = file[0..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(Error::Magic(magic));
    }
    let version = u16::from_le_bytes(file[4..6].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Version(version));
    }
    let fmt = FloatFormat::from_code(file[6])?;
    let block_size = u32::from_le_bytes(file[8..12].try_into().unwrap());
    check_block_size(block_size)?;
    let tensor_count = u32::from_le_bytes(file[12..16].try_into().unwrap());
    let stored_crc = u32::from_le_bytes(file[16..20].try_into().unwrap());
    let computed = crc32fast::hash(&file[HEADER_LEN..]);
    if stored_crc != computed {
        return Err(Error::Checksum {
            stored: stored_crc,
            computed,
        });
    }

    let mut cursor = HEADER_LEN;
    let take = |cursor: &mut usize, len: usize, section: &'static str| -> Result<&[u8]> {
        let end = cursor.checked_add(len).ok_or(Error::Truncation {
            section,
            needed: len,
            available: 0,
        })?;
        if end > file.len() {
            return Err(Error::Truncation {
                section,
                needed: len,
                available: file.len() - *cursor,
            });
        }
        let slice = &file[*cursor..end];
        *cursor = end;
        Ok(slice)
    };

    let mut tensors = Vec::with_capacity(tensor_count as usize);
    for _ in 0..tensor_count {
        let name_len =
            u16::from_le_bytes(take(&mut cursor, 2, "tensor name")?.try_into().unwrap()) as usize;
        let name = std::str::from_utf8(take(&mut cursor, name_len, "tensor name")?)
            .map_err(|_| Error::Format("tensor name is not UTF-8".into()))?
            .to_string();
        let element_count =
            u64::from_le_bytes(take(&mut cursor, 8, "tensor record")?.try_into().unwrap());
        let rec = take(&mut cursor, 5, "tensor record")?;
        let params = TunedParams {
            b: rec[0] as u16,
            n: rec[1],
            m: rec[2],
            group_len: u16::from_le_bytes([rec[3], rec[4]]) as u32,
        };
        params.validate(fmt, block_size)?;
        let block_count = element_count.div_ceil(block_size as u64) as usize;
        let mut blocks = Vec::with_capacity(block_count);
        for _ in 0..block_count {
            let entry = take(&mut cursor, 13, "block directory")?;
            blocks.push(BlockInfo {
                offset: u64::from_le_bytes(entry[0..8].try_into().unwrap()),
                size: u32::from_le_bytes(entry[8..12].try_into().unwrap()),
                flags: entry[12],
            });
        }
        tensors.push(TensorInfo {
            name,
            element_count,
            params,
            blocks,
        });
    }

    let payload = &file[cursor..];
    let mut prev_end = 0u64;
    for t in &tensors {
        for blk in &t.blocks {
            if blk.offset < prev_end {
                return Err(Error::Format("overlapping block directory entries".into()));
            }
            let end = blk.offset + blk.size as u64;
            if end > payload.len() as u64 {
                return Err(Error::Truncation {
                    section: "block payload",
                    needed: end as usize,
                    available: payload.len(),
                });
            }
            prev_end = end;
        }
    }

    Ok(Parsed {
        info: ContainerInfo {
            format: fmt,
            block_size,
            tensors,
            table_len: cursor - HEADER_LEN,
            payload_len: payload.len(),
        },
        payload,
    })
}

/// Parse container metadata without decoding payloads.
pub fn read_info(file: &[u8]) -> Result<ContainerInfo> {
    Ok(parse(file)?.info)
}

/// Decompress a container back to the concatenated tensor bytes.
pub fn decompress(file: &[u8], workers: usize) -> Result<Vec<u8>> {
    let parsed = parse(file)?;
    let fmt = parsed.info.format;
    let elem = fmt.bytes_per_element();
    let block_elems = parsed.info.block_size as usize;

    let total_out: usize = parsed
        .info
        .tensors
        .iter()
        .map(|t| t.element_count as usize * elem)
        .sum();
    let mut out = vec![0u8; total_out];

    // One job per block across all tensors, each owning its output slice so
    // decoded bytes land (and fault) in place on the workers.
    struct Job<'a, 'b> {
        payload: &'a [u8],
        dst: &'b mut [u8],
        params: TunedParams,
        true_n: usize,
        flags: u8,
    }
    let mut jobs = Vec::new();
    let mut out_region = out.as_mut_slice();
    for t in &parsed.info.tensors {
        let total = t.element_count as usize;
        for (i, blk) in t.blocks.iter().enumerate() {
            let true_n = block_elems.min(total - i * block_elems);
            let (dst, rest) = out_region.split_at_mut(true_n * elem);
            out_region = rest;
            jobs.push(Job {
                payload: &parsed.payload
                    [blk.offset as usize..(blk.offset + blk.size as u64) as usize],
                dst,
                params: t.params,
                true_n,
                flags: blk.flags,
            });
        }
    }
    let results = map_indexed(jobs, workers, |_, job| {
        let bytes = decode_block(job.payload, fmt, &job.params, job.true_n, job.flags)?;
        job.dst.copy_from_slice(&bytes);
        Ok::<(), Error>(())
    });
    for r in results {
        r?;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Verification and reporting
// ---------------------------------------------------------------------------

fn ratio(original: u64, compressed: u64) -> f64 {
    if compressed == 0 {
        return 1.0;
    }
    original as f64 / compressed as f64
}

/// Measured coded-exponent bits per element across all coded blocks.
fn measured_exponent_bits(info: &ContainerInfo) -> f64 {
    let fmt = info.format;
    let mut exp_bits = 0u64;
    let mut elements = 0u64;
    for t in &info.tensors {
        let total = t.element_count as usize;
        elements += t.element_count;
        for (i, blk) in t.blocks.iter().enumerate() {
            if blk.is_raw() {
                continue;
            }
            let true_n = (info.block_size as usize).min(total - i * info.block_size as usize);
            let residue = bitpack::fixed_packed_len(true_n, fmt.residue_bits());
            exp_bits += (blk.size as u64 - residue as u64) * 8;
        }
    }
    if elements == 0 {
        0.0
    } else {
        exp_bits as f64 / elements as f64
    }
}

/// Expected-bits prediction of the whole-file ratio from per-tensor
/// histograms of the original bytes.
fn formula_ratio(original: &[u8], info: &ContainerInfo) -> f64 {
    let fmt = info.format;
    let elem = fmt.bytes_per_element();
    let mut predicted_bits = 0.0f64;
    let mut total_bits = 0.0f64;
    let mut offset = 0usize;
    for t in &info.tensors {
        let len = t.element_count as usize * elem;
        let slice = &original[offset..offset + len];
        offset += len;
        if slice.is_empty() {
            continue;
        }
        let Ok(hist) = exponent_histogram(slice, fmt, 1) else {
            continue;
        };
        let per_exp = tuner::expected_bits_for(&hist, &t.params)
            .unwrap_or(fmt.exp_bits() as f64 + 1.0);
        let n = t.element_count as f64;
        predicted_bits += n * (fmt.residue_bits() as f64 + per_exp);
        total_bits += n * fmt.total_bits() as f64;
    }
    if predicted_bits == 0.0 {
        1.0
    } else {
        total_bits / predicted_bits
    }
}

/// Decompress `file`, compare against `original` byte-for-byte, and report
/// ratios. Fails with [`Error::Mismatch`] at the first differing offset.
pub fn verify(original: &[u8], file: &[u8]) -> Result<RatioReport> {
    let info = read_info(file)?;
    let decoded = decompress(file, 0)?;
    if decoded.len() != original.len() {
        let offset = original
            .iter()
            .zip(&decoded)
            .position(|(a, b)| a != b)
            .unwrap_or_else(|| original.len().min(decoded.len()));
        return Err(Error::Mismatch { offset });
    }
    if let Some(offset) = original.iter().zip(&decoded).position(|(a, b)| a != b) {
        return Err(Error::Mismatch { offset });
    }
    Ok(RatioReport {
        original_bytes: original.len() as u64,
        compressed_bytes: file.len() as u64,
        compression_ratio: ratio(original.len() as u64, file.len() as u64),
        exponent_bits_per_element: measured_exponent_bits(&info),
        formula_ratio: formula_ratio(original, &info),
    })
}

/// Cost model of the statistical-mapping baseline: exponents mapped through
/// a frequency-rank table, grouped in sixteens, each group stored at the bit
/// width of its largest rank plus 4 bits of width metadata. Returns the
/// implied ratio without emitting a stream.
pub fn reference_ratio_v0(raw: &[u8], fmt: FloatFormat) -> Result<RatioReport> {
    const GROUP: usize = 16;
    let payload = fpsplit::split(raw, fmt)?;
    if payload.element_count == 0 {
        return Ok(RatioReport {
            original_bytes: 0,
            compressed_bytes: 0,
            compression_ratio: 1.0,
            exponent_bits_per_element: 0.0,
            formula_ratio: 1.0,
        });
    }
    let hist = ExponentHistogram::build(&payload.exponents, fmt.exp_bits())?;

    // Frequency-rank lookup: most frequent value -> rank 0.
    let mut order: Vec<u16> = hist
        .counts()
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(x, _)| x as u16)
        .collect();
    order.sort_by(|&a, &b| {
        hist.counts()[b as usize]
            .cmp(&hist.counts()[a as usize])
            .then(a.cmp(&b))
    });
    let mut rank = vec![0u16; hist.counts().len()];
    for (r, &x) in order.iter().enumerate() {
        rank[x as usize] = r as u16;
    }

    let mut exp_bits = 0u64;
    for group in payload.exponents.chunks(GROUP) {
        let max_rank = group.iter().map(|&x| rank[x as usize]).max().unwrap();
        let width = 16 - u16::leading_zeros(max_rank) as u64; // bits of the max
        exp_bits += 4 + width * group.len() as u64;
    }
    let residue_bits = payload.element_count as u64 * fmt.residue_bits() as u64;
    let compressed_bytes = (exp_bits + residue_bits).div_ceil(8);

    let params = tuner::tune(&hist, &tuner::default_group_lengths(DEFAULT_BLOCK_SIZE));
    let predicted = tuner::expected_bits_for(&hist, &params)
        .map(|bits| fmt.total_bits() as f64 / (fmt.residue_bits() as f64 + bits))
        .unwrap_or(1.0);

    Ok(RatioReport {
        original_bytes: raw.len() as u64,
        compressed_bytes,
        compression_ratio: ratio(raw.len() as u64, compressed_bytes),
        exponent_bits_per_element: exp_bits as f64 / payload.element_count as f64,
        formula_ratio: predicted,
    })
}
