//! Deterministic synthetic model-weight generators.
//!
//! Real checkpoint downloads run to tens of gigabytes; these profiles stand
//! in for them at desk scale. Exponents follow the shape observed in model
//! weights — a geometric bulk whose frequency rank falls linearly with the
//! exponent value, a thin sub-bulk tail, and a few rare high-exponent
//! outliers — while signs and mantissas are uniform random bits. The bulk
//! of a profile is centred so the tuner lands on the parameter tuples seen
//! on real checkpoints, e.g. `(123, 6, 3, 16)` for bf16 language models.
//!
//! Everything is seeded and platform-independent, so tests, benchmarks and
//! the browser demo reproduce identical byte streams.

use crate::format::FloatFormat;
use crate::transform;
use crate::tuner::TunedParams;

/// SplitMix64: small, fast, reproducible. Not for cryptography.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }
}

/// An exponent distribution plus element layout for one float format.
#[derive(Debug, Clone)]
pub struct WeightProfile {
    pub format: FloatFormat,
    /// `(exponent, probability)` ascending by exponent; probabilities sum to 1.
    entries: Vec<(u16, f64)>,
    cumulative: Vec<f64>,
}

impl WeightProfile {
    fn new(format: FloatFormat, mut entries: Vec<(u16, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        let total: f64 = entries.iter().map(|e| e.1).sum();
        for e in &mut entries {
            e.1 /= total;
        }
        let mut cumulative = Vec::with_capacity(entries.len());
        let mut acc = 0.0;
        for e in &entries {
            acc += e.1;
            cumulative.push(acc);
        }
        *cumulative.last_mut().unwrap() = 1.0;
        WeightProfile {
            format,
            entries,
            cumulative,
        }
    }

    /// bf16 transformer weights: bulk over exponents 116..=122 decaying
    /// geometrically (ratio 0.636), a just-above-threshold spike at 123, a
    /// thin tail down to 92 (ratio 0.80) and sparse outliers above.
    pub fn bf16_language_model() -> Self {
        Self::new(FloatFormat::Bf16, Self::wide_exponent_law())
    }

    /// fp32 encoder weights share the 8-bit exponent law of the bf16
    /// profile; only the element layout differs.
    pub fn fp32_encoder() -> Self {
        Self::new(FloatFormat::Fp32, Self::wide_exponent_law())
    }

    /// fp16 transformer weights: 5-bit exponents with bulk over 1..=7
    /// (ratio 0.62), a small mass at zero, and rare outliers up to 14.
    pub fn fp16_language_model() -> Self {
        let mut entries = vec![(0u16, 0.004)];
        entries.extend(geometric(1, 7, 0.62, 0.98435 - 0.004, true));
        let rest = 1.0 - 0.98435;
        for (x, w) in [(8u16, 8.0), (9, 4.0), (10, 2.0), (12, 1.0), (14, 0.5)] {
            entries.push((x, rest * w / 15.5));
        }
        Self::new(FloatFormat::Fp16, entries)
    }

    pub fn for_format(format: FloatFormat) -> Self {
        match format {
            FloatFormat::Bf16 => Self::bf16_language_model(),
            FloatFormat::Fp16 => Self::fp16_language_model(),
            FloatFormat::Fp32 => Self::fp32_encoder(),
        }
    }

    fn wide_exponent_law() -> Vec<(u16, f64)> {
        let spike = 0.0166;
        let in_window = 0.98126; // mass mapping to codes below 2^3 at (123, 6)
        let outlier_total = 0.003;
        let mut entries = vec![(123u16, spike)];
        entries.extend(geometric(116, 122, 0.636, in_window - spike, true));
        entries.extend(geometric(92, 115, 0.80, 1.0 - in_window - outlier_total, true));
        for (x, w) in [(126u16, 4.0), (130, 2.0), (134, 1.0)] {
            entries.push((x, outlier_total * w / 7.0));
        }
        entries
    }

    pub fn pmf(&self) -> &[(u16, f64)] {
        &self.entries
    }

    /// Entropy of the exact exponent distribution in bits.
    pub fn exact_entropy(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.1 > 0.0)
            .map(|e| -e.1 * e.1.log2())
            .sum()
    }

    /// Probability that a mapped code fits in `w` bits under `(b, n)`.
    pub fn code_cdf(&self, b: u16, n: u8, w: u8) -> f64 {
        self.entries
            .iter()
            .filter(|&&(x, _)| (transform::forward_map_raw(x, b, n) as u32) < (1 << w))
            .map(|e| e.1)
            .sum()
    }

    /// Expected coded bits per exponent for `params`, from the exact pmf.
    pub fn expected_code_bits(&self, params: &TunedParams) -> f64 {
        let p_m = self.code_cdf(params.b, params.n, params.m);
        crate::tuner::expected_bits(params.n, params.m, params.group_len, p_m)
    }

    /// Predicted compression ratio from the exact pmf: raw element bits over
    /// residue bits plus expected exponent bits.
    pub fn predicted_ratio(&self, params: &TunedParams) -> f64 {
        let total = self.format.total_bits() as f64;
        total / (self.format.residue_bits() as f64 + self.expected_code_bits(params))
    }

    pub fn sample_exponent(&self, u: f64) -> u16 {
        let idx = self.cumulative.partition_point(|&c| c <= u);
        self.entries[idx.min(self.entries.len() - 1)].0
    }

    /// Generate `element_count` little-endian elements with exponents drawn
    /// from the profile and uniform random sign/mantissa bits.
    pub fn generate(&self, element_count: usize, seed: u64) -> Vec<u8> {
        let mut rng = SplitMix64::new(seed);
        let mut out = Vec::with_capacity(element_count * self.format.bytes_per_element());
        let mant = self.format.mantissa_bits();
        match self.format {
            FloatFormat::Bf16 | FloatFormat::Fp16 => {
                for _ in 0..element_count {
                    let exp = self.sample_exponent(rng.next_f64());
                    let r = rng.next_u64();
                    let sign = (r & 1) as u16;
                    let mantissa = ((r >> 1) as u16) & ((1 << mant) - 1);
                    let bits = (sign << 15) | (exp << mant) | mantissa;
                    out.extend_from_slice(&bits.to_le_bytes());
                }
            }
            FloatFormat::Fp32 => {
                for _ in 0..element_count {
                    let exp = self.sample_exponent(rng.next_f64());
                    let r = rng.next_u64();
                    let sign = (r & 1) as u32;
                    let mantissa = ((r >> 1) as u32) & 0x7F_FFFF;
                    let bits = (sign << 31) | ((exp as u32) << 23) | mantissa;
                    out.extend_from_slice(&bits.to_le_bytes());
                }
            }
        }
        out
    }
}

fn geometric(lo: u16, hi: u16, ratio: f64, total: f64, descending_from_hi: bool) -> Vec<(u16, f64)> {
    let count = (hi - lo + 1) as i32;
    let norm: f64 = (0..count).map(|k| ratio.powi(k)).sum();
    (0..count)
        .map(|k| {
            let x = if descending_from_hi { hi - k as u16 } else { lo + k as u16 };
            (x, total * ratio.powi(k) / norm)
        })
        .collect()
}
