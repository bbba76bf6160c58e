//! Browser bindings for the compressor demo page.
//!
//! Three operations back the page: exponent analysis of generated weights,
//! parameter tuning with the expected-bits surface, and an in-browser
//! compress/decompress round trip with a section breakdown. A fourth entry
//! point compresses user-supplied bytes. Results cross the boundary as JSON
//! strings; the page renders them onto canvases with plain JavaScript.
//!
//! The [`api`] module holds the JSON logic with string errors so it also
//! runs (and is tested) on native targets; the `#[wasm_bindgen]` wrappers
//! only translate errors at the boundary.

use wasm_bindgen::prelude::*;

pub mod api {
    use serde_json::json;

    use enec::analysis::{self, ExponentHistogram};
    use enec::stream::{self, CompressOptions};
    use enec::synth::WeightProfile;
    use enec::tuner::{self, TunedParams};
    use enec::FloatFormat;

    type ApiResult = Result<String, String>;

    fn parse_format(name: &str) -> Result<FloatFormat, String> {
        name.parse::<FloatFormat>().map_err(|e| e.to_string())
    }

    fn histogram_json(hist: &ExponentHistogram) -> serde_json::Value {
        let bins: Vec<serde_json::Value> =
            hist.occupied().map(|(x, p)| json!([x, p])).collect();
        let fit = analysis::rank_fit(hist).ok();
        json!({
            "bins": bins,
            "total": hist.total(),
            "min_exp": hist.min_exp(),
            "max_exp": hist.max_exp(),
            "distinct": hist.distinct_values(),
            "entropy_bits": analysis::entropy(hist),
            "rank_fit": fit.map(|f| json!({
                "slope": f.slope,
                "intercept": f.intercept,
                "r_squared": f.r_squared,
            })),
            "ranks": rank_points(hist),
        })
    }

    fn rank_points(hist: &ExponentHistogram) -> Vec<serde_json::Value> {
        let mut occupied: Vec<(u16, u64)> = hist
            .occupied()
            .map(|(x, p)| (x, (p * hist.total() as f64).round() as u64))
            .collect();
        occupied.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        occupied
            .iter()
            .enumerate()
            .map(|(rank0, &(x, _))| json!([x, rank0 + 1]))
            .collect()
    }

    fn generated_histogram(
        format: &str,
        count: u32,
        seed: u32,
    ) -> Result<(WeightProfile, ExponentHistogram), String> {
        let fmt = parse_format(format)?;
        let profile = WeightProfile::for_format(fmt);
        let data = profile.generate(count as usize, seed as u64);
        let hist = stream::exponent_histogram(&data, fmt, 1).map_err(|e| e.to_string())?;
        Ok((profile, hist))
    }

    pub fn analyze_profile(format: &str, count: u32, seed: u32) -> ApiResult {
        let (profile, hist) = generated_histogram(format, count.max(1), seed)?;
        let mut out = histogram_json(&hist);
        out["format"] = json!(profile.format.name());
        out["exact_entropy_bits"] = json!(profile.exact_entropy());
        Ok(out.to_string())
    }

    pub fn tune_profile(format: &str, count: u32, seed: u32) -> ApiResult {
        let (profile, hist) = generated_histogram(format, count.max(1), seed)?;
        let fmt = profile.format;
        let candidates = tuner::default_group_lengths(stream::DEFAULT_BLOCK_SIZE);
        let params = tuner::tune(&hist, &candidates);
        let cdf = tuner::bitwidth_cdf(&hist, params.b, params.n).map_err(|e| e.to_string())?;
        let grid: Vec<serde_json::Value> = (1..=params.n.min(8))
            .map(|m| {
                let bits: Vec<f64> = candidates
                    .iter()
                    .map(|&l| tuner::expected_bits(params.n, m, l, cdf.at(m)))
                    .collect();
                json!({ "m": m, "bits": bits })
            })
            .collect();
        let expected = tuner::expected_bits_for(&hist, &params).map_err(|e| e.to_string())?;
        Ok(json!({
            "format": fmt.name(),
            "b": params.b,
            "n": params.n,
            "m": params.m,
            "L": params.group_len,
            "group_lengths": candidates,
            "expected_bits": expected,
            "predicted_ratio": fmt.total_bits() as f64 / (fmt.residue_bits() as f64 + expected),
            "grid": grid,
        })
        .to_string())
    }

    fn section_breakdown(file: &[u8]) -> Result<serde_json::Value, String> {
        let info = stream::read_info(file).map_err(|e| e.to_string())?;
        let fmt = info.format;
        let mut residue = 0u64;
        let mut exponent = 0u64;
        let mut raw = 0u64;
        let mut payload = 0u64;
        for t in &info.tensors {
            let total = t.element_count as usize;
            for (i, blk) in t.blocks.iter().enumerate() {
                payload += blk.size as u64;
                if blk.is_raw() {
                    raw += blk.size as u64;
                } else {
                    let true_n =
                        (info.block_size as usize).min(total - i * info.block_size as usize);
                    let res = enec::bitpack::fixed_packed_len(true_n, fmt.residue_bits()) as u64;
                    residue += res;
                    exponent += blk.size as u64 - res;
                }
            }
        }
        Ok(json!({
            "container": file.len() as u64 - payload,
            "exponent": exponent,
            "residue": residue,
            "raw_blocks": raw,
        }))
    }

    fn roundtrip_report(data: &[u8], fmt: FloatFormat, opts: &CompressOptions) -> ApiResult {
        let file = stream::compress(data, fmt, opts).map_err(|e| e.to_string())?;
        let back = stream::decompress(&file, 1).map_err(|e| e.to_string())?;
        let report = stream::verify(data, &file).map_err(|e| e.to_string())?;
        Ok(json!({
            "format": fmt.name(),
            "original_bytes": data.len(),
            "compressed_bytes": file.len(),
            "ratio": report.compression_ratio,
            "exponent_bits_per_element": report.exponent_bits_per_element,
            "formula_ratio": report.formula_ratio,
            "identical": back == data,
            "sections": section_breakdown(&file)?,
        })
        .to_string())
    }

    pub fn roundtrip_profile(format: &str, count: u32, seed: u32) -> ApiResult {
        let fmt = parse_format(format)?;
        let data = WeightProfile::for_format(fmt).generate(count.max(1) as usize, seed as u64);
        let opts = CompressOptions {
            block_size: stream::DEFAULT_BLOCK_SIZE,
            params: None,
            workers: 1,
        };
        roundtrip_report(&data, fmt, &opts)
    }

    pub fn compress_bytes(data: &[u8], format: &str) -> ApiResult {
        let fmt = parse_format(format)?;
        let opts = CompressOptions {
            block_size: stream::DEFAULT_BLOCK_SIZE,
            params: None,
            workers: 1,
        };
        roundtrip_report(data, fmt, &opts)
    }

    pub fn reference_params(format: &str) -> ApiResult {
        let fmt = parse_format(format)?;
        let p = match fmt {
            FloatFormat::Bf16 | FloatFormat::Fp32 => TunedParams {
                b: 123,
                n: 6,
                m: 3,
                group_len: 16,
            },
            FloatFormat::Fp16 => TunedParams {
                b: 7,
                n: 4,
                m: 3,
                group_len: 16,
            },
        };
        Ok(json!({ "b": p.b, "n": p.n, "m": p.m, "L": p.group_len }).to_string())
    }
}

fn to_js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

/// Generate synthetic weights and return exponent statistics as JSON.
#[wasm_bindgen]
pub fn analyze_profile(format: &str, count: u32, seed: u32) -> Result<String, JsValue> {
    to_js(api::analyze_profile(format, count, seed))
}

/// Tune parameters on generated weights; includes the expected-bits grid
/// over threshold width and group length for plotting.
#[wasm_bindgen]
pub fn tune_profile(format: &str, count: u32, seed: u32) -> Result<String, JsValue> {
    to_js(api::tune_profile(format, count, seed))
}

/// Compress and decompress generated weights in the browser; reports the
/// ratio, the per-section byte split and the identity check.
#[wasm_bindgen]
pub fn roundtrip_profile(format: &str, count: u32, seed: u32) -> Result<String, JsValue> {
    to_js(api::roundtrip_profile(format, count, seed))
}

/// Compress caller-supplied bytes (e.g. a dropped weight file).
#[wasm_bindgen]
pub fn compress_bytes(data: &[u8], format: &str) -> Result<String, JsValue> {
    to_js(api::compress_bytes(data, format))
}

/// Reference parameters for the format, for the page's preset buttons.
#[wasm_bindgen]
pub fn reference_params(format: &str) -> Result<String, JsValue> {
    to_js(api::reference_params(format))
}

#[cfg(test)]
mod tests {
    use super::api;

    #[test]
    fn analyze_json_has_fit_and_entropy() {
        let text = api::analyze_profile("bf16", 100_000, 7).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["format"], "bf16");
        let entropy = v["entropy_bits"].as_f64().unwrap();
        assert!((entropy - 2.58).abs() < 0.1, "{entropy}");
        assert!(v["rank_fit"]["slope"].as_f64().is_some());
        assert!(v["bins"].as_array().unwrap().len() > 10);
    }

    #[test]
    fn tune_json_reproduces_reference_tuple() {
        let text = api::tune_profile("bf16", 500_000, 1).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["b"], 123);
        assert_eq!(v["n"], 6);
        assert_eq!(v["m"], 3);
        assert_eq!(v["L"], 16);
        assert_eq!(v["grid"].as_array().unwrap().len(), 6);
    }

    #[test]
    fn roundtrip_json_reports_identity_and_sections() {
        let text = api::roundtrip_profile("fp16", 40_000, 3).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["identical"], true);
        let ratio = v["ratio"].as_f64().unwrap();
        assert!(ratio > 1.05, "{ratio}");
        let sections = &v["sections"];
        let sum = sections["container"].as_u64().unwrap()
            + sections["exponent"].as_u64().unwrap()
            + sections["residue"].as_u64().unwrap()
            + sections["raw_blocks"].as_u64().unwrap();
        assert_eq!(sum, v["compressed_bytes"].as_u64().unwrap());
    }

    #[test]
    fn compress_bytes_handles_misaligned_input() {
        assert!(api::compress_bytes(&[1, 2, 3], "fp32").is_err());
    }

    #[test]
    fn reference_params_cover_all_formats() {
        for fmt in ["bf16", "fp16", "fp32"] {
            let v: serde_json::Value =
                serde_json::from_str(&api::reference_params(fmt).unwrap()).unwrap();
            assert!(v["b"].as_u64().is_some());
        }
        assert!(api::reference_params("int8").is_err());
    }
}
