//! Load model weights from raw binary files and safetensors archives.
//!
//! A safetensors file starts with a little-endian u64 header length, then
//! that many bytes of a JSON object mapping tensor names to `{dtype, shape,
//! data_offsets}`; the data section follows immediately. Offsets are
//! relative to the start of the data section. Loading only records byte
//! ranges — no value interpretation happens here.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::format::FloatFormat;

/// A byte range of one tensor inside a source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSource {
    pub name: String,
    pub dtype: FloatFormat,
    /// Offset into the data section (raw files: into the file).
    pub offset: usize,
    pub length: usize,
    /// Informational; empty for raw files.
    pub shape: Vec<u64>,
}

/// A parsed safetensors archive held in memory.
#[derive(Debug)]
pub struct SafetensorsFile {
    pub bytes: Vec<u8>,
    /// Offset of the data section within `bytes`.
    pub data_start: usize,
    /// Supported tensors, ordered by data offset.
    pub tensors: Vec<TensorSource>,
    /// `(name, dtype)` pairs skipped in lenient mode.
    pub skipped: Vec<(String, String)>,
}

impl SafetensorsFile {
    pub fn tensor_data(&self, t: &TensorSource) -> &[u8] {
        let start = self.data_start + t.offset;
        &self.bytes[start..start + t.length]
    }

    /// The archive's single element format; archives mixing several float
    /// formats cannot go into one container.
    pub fn uniform_dtype(&self) -> Result<FloatFormat> {
        let mut it = self.tensors.iter();
        let first = it
            .next()
            .ok_or_else(|| Error::Format("archive has no supported tensors".into()))?
            .dtype;
        if let Some(t) = it.find(|t| t.dtype != first) {
            return Err(Error::Format(format!(
                "archive mixes {} and {} tensors; compress them separately",
                first.name(),
                t.dtype.name()
            )));
        }
        Ok(first)
    }
}

/// Load a raw little-endian weight dump as one unnamed tensor.
pub fn load_raw(path: &Path, dtype: FloatFormat) -> Result<(Vec<u8>, TensorSource)> {
    let bytes = std::fs::read(path)?;
    let elem = dtype.bytes_per_element();
    if bytes.len() % elem != 0 {
        return Err(Error::Length {
            len: bytes.len(),
            elem_bytes: elem,
        });
    }
    let source = TensorSource {
        name: String::new(),
        dtype,
        offset: 0,
        length: bytes.len(),
        shape: Vec::new(),
    };
    Ok((bytes, source))
}

/// Load and parse a safetensors archive. In strict mode an unsupported
/// dtype is an error; otherwise such tensors land in `skipped`.
pub fn load_safetensors(path: &Path, strict: bool) -> Result<SafetensorsFile> {
    let bytes = std::fs::read(path)?;
    parse_safetensors(bytes, strict)
}

/// Parse an in-memory safetensors archive.
pub fn parse_safetensors(bytes: Vec<u8>, strict: bool) -> Result<SafetensorsFile> {
    if bytes.len() < 8 {
        return Err(Error::Header("file shorter than the header length field".into()));
    }
    let header_len = u64::from_le_bytes(bytes[0..8].try_into().unwrap());
    let data_start = 8usize
        .checked_add(usize::try_from(header_len).map_err(|_| header_too_long(header_len))?)
        .ok_or_else(|| header_too_long(header_len))?;
    if data_start > bytes.len() {
        return Err(header_too_long(header_len));
    }
    let header: Value = serde_json::from_slice(&bytes[8..data_start])
        .map_err(|e| Error::Header(format!("invalid JSON: {e}")))?;
    let Value::Object(map) = header else {
        return Err(Error::Header("top level is not a JSON object".into()));
    };
    let data_len = bytes.len() - data_start;

    // BTreeMap gives a deterministic walk regardless of JSON key order.
    let map: BTreeMap<String, Value> = map.into_iter().collect();
    let mut tensors = Vec::new();
    let mut skipped = Vec::new();
    for (name, value) in map {
        if name == "__metadata__" {
            continue;
        }
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Header(format!("tensor `{name}` is not an object")))?;
        let dtype_str = obj
            .get("dtype")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Header(format!("tensor `{name}` has no dtype")))?;
        let dtype = match dtype_str {
            "F32" => Some(FloatFormat::Fp32),
            "F16" => Some(FloatFormat::Fp16),
            "BF16" => Some(FloatFormat::Bf16),
            _ => None,
        };
        let Some(dtype) = dtype else {
            if strict {
                return Err(Error::UnsupportedDtype {
                    tensor: name,
                    dtype: dtype_str.to_string(),
                });
            }
            skipped.push((name, dtype_str.to_string()));
            continue;
        };

        let shape: Vec<u64> = obj
            .get("shape")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Header(format!("tensor `{name}` has no shape")))?
            .iter()
            .map(|v| {
                v.as_u64()
                    .ok_or_else(|| Error::Header(format!("tensor `{name}` has a bad shape entry")))
            })
            .collect::<Result<_>>()?;
        let offsets = obj
            .get("data_offsets")
            .and_then(Value::as_array)
            .filter(|a| a.len() == 2)
            .ok_or_else(|| Error::Header(format!("tensor `{name}` has no data_offsets")))?;
        let begin = offsets[0].as_u64().and_then(|v| usize::try_from(v).ok());
        let end = offsets[1].as_u64().and_then(|v| usize::try_from(v).ok());
        let (Some(begin), Some(end)) = (begin, end) else {
            return Err(Error::Header(format!("tensor `{name}` has bad data_offsets")));
        };

        if end < begin || end > data_len {
            return Err(Error::Offset {
                tensor: name,
                reason: format!("range {begin}..{end} exceeds data section of {data_len} bytes"),
            });
        }
        let expected: u64 = shape.iter().product::<u64>() * dtype.bytes_per_element() as u64;
        if expected != (end - begin) as u64 {
            return Err(Error::Offset {
                tensor: name,
                reason: format!(
                    "shape implies {expected} bytes but the range holds {}",
                    end - begin
                ),
            });
        }
        tensors.push(TensorSource {
            name,
            dtype,
            offset: begin,
            length: end - begin,
            shape,
        });
    }

    tensors.sort_by_key(|t| t.offset);
    for pair in tensors.windows(2) {
        if pair[0].offset + pair[0].length > pair[1].offset {
            return Err(Error::Offset {
                tensor: pair[1].name.clone(),
                reason: format!("range overlaps tensor `{}`", pair[0].name),
            });
        }
    }

    Ok(SafetensorsFile {
        bytes,
        data_start,
        tensors,
        skipped,
    })
}

fn header_too_long(len: u64) -> Error {
    Error::Header(format!("header length {len} exceeds the file"))
}

/// Build a minimal safetensors archive; test and fixture helper.
pub fn build_safetensors(entries: &[(&str, &str, &[u64], &[u8])]) -> Vec<u8> {
    let mut header = String::from("{");
    let mut offset = 0usize;
    for (i, (name, dtype, shape, data)) in entries.iter().enumerate() {
        if i > 0 {
            header.push(',');
        }
        let dims = shape
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(",");
        header.push_str(&format!(
            "\"{name}\":{{\"dtype\":\"{dtype}\",\"shape\":[{dims}],\"data_offsets\":[{},{}]}}",
            offset,
            offset + data.len()
        ));
        offset += data.len();
    }
    header.push('}');
    let mut out = Vec::with_capacity(8 + header.len() + offset);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for (_, _, _, data) in entries {
        out.extend_from_slice(data);
    }
    out
}
