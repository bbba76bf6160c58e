//! Randomized invariants across the pipeline layers.

use proptest::prelude::*;

use enec::bitpack::{self, PackedStream};
use enec::fpsplit;
use enec::scan::{self, Tile};
use enec::stream::{self, CompressOptions};
use enec::synth::WeightProfile;
use enec::transform;
use enec::tuner::TunedParams;
use enec::FloatFormat;

fn format_strategy() -> impl Strategy<Value = FloatFormat> {
    prop_oneof![
        Just(FloatFormat::Bf16),
        Just(FloatFormat::Fp16),
        Just(FloatFormat::Fp32),
    ]
}

/// Arbitrary bytes truncated to element alignment.
fn aligned_bytes(fmt: FloatFormat, max_elems: usize) -> impl Strategy<Value = Vec<u8>> {
    let elem = fmt.bytes_per_element();
    proptest::collection::vec(any::<u8>(), 0..max_elems * elem)
        .prop_map(move |mut v| {
            v.truncate(v.len() - v.len() % elem);
            v
        })
}

proptest! {
    #[test]
    fn split_combine_identity(fmt in format_strategy(), seed in any::<u64>(), len in 0usize..2000) {
        let data = {
            let mut rng = enec::synth::SplitMix64::new(seed);
            let mut v = vec![0u8; len * fmt.bytes_per_element()];
            for b in &mut v { *b = rng.next_u64() as u8; }
            v
        };
        let payload = fpsplit::split(&data, fmt).unwrap();
        prop_assert_eq!(fpsplit::combine(&payload, fmt).unwrap(), data);
    }

    #[test]
    fn hh_round_trip_and_size(width in 1u8..=8, log_n in 0u32..=10, seed in any::<u64>()) {
        let n = 1usize << log_n;
        let mut rng = enec::synth::SplitMix64::new(seed);
        let values: Vec<u16> = (0..n).map(|_| (rng.next_u64() as u16) & ((1 << width) - 1)).collect();
        let packed = bitpack::hh_pack(&values, width).unwrap();
        prop_assert_eq!(packed.bytes.len(), bitpack::hh_packed_len(n, width));
        prop_assert_eq!(bitpack::hh_unpack(&packed).unwrap(), values);
    }

    #[test]
    fn hh_distinct_inputs_distinct_streams(width in 1u8..=8, log_n in 4u32..=8, seed in any::<u64>(), flip in any::<usize>()) {
        let n = 1usize << log_n;
        let mut rng = enec::synth::SplitMix64::new(seed);
        let values: Vec<u16> = (0..n).map(|_| (rng.next_u64() as u16) & ((1 << width) - 1)).collect();
        let mut other = values.clone();
        let idx = flip % n;
        other[idx] ^= 1;
        let a = bitpack::hh_pack(&values, width).unwrap();
        let b = bitpack::hh_pack(&other, width).unwrap();
        prop_assert_ne!(a.bytes, b.bytes);
    }

    #[test]
    fn fixed_round_trip(width in 1u32..=32, count in 0usize..200, seed in any::<u64>()) {
        let mut rng = enec::synth::SplitMix64::new(seed);
        let mask = if width == 32 { u32::MAX } else { (1u32 << width) - 1 };
        let values: Vec<u32> = (0..count).map(|_| rng.next_u64() as u32 & mask).collect();
        let bytes = bitpack::fixed_pack(&values, width).unwrap();
        prop_assert_eq!(bytes.len(), bitpack::fixed_packed_len(count, width));
        prop_assert_eq!(bitpack::fixed_unpack(&bytes, width, count).unwrap(), values);
    }

    #[test]
    fn classify_inverse_identity(log_groups in 0u32..=6, low in 1u8..=4, extra in 1u8..=5, seed in any::<u64>()) {
        let group_len = 16usize;
        let code_width = low + extra;
        let n = (1usize << log_groups) * group_len;
        let mut rng = enec::synth::SplitMix64::new(seed);
        // Mostly small codes with occasional anomalies, like mapped exponents.
        let codes: Vec<u16> = (0..n)
            .map(|_| {
                let r = rng.next_u64();
                if r.is_multiple_of(23) {
                    (r >> 8) as u16 & ((1 << code_width) - 1)
                } else {
                    (r >> 8) as u16 & ((1 << low) - 1)
                }
            })
            .collect();
        let cls = bitpack::group_classify(&codes, group_len, low, code_width).unwrap();
        prop_assert_eq!(bitpack::classify_inverse(&cls, group_len, low).unwrap(), codes);
    }

    #[test]
    fn transform_round_trip_in_window(n in 1u8..=9, b in 0u16..256, offset in 0i32..1024) {
        let half = 1i32 << (n - 1);
        let span = 2 * half - 1; // strict window width
        let x = b as i32 - half + 1 + offset % span;
        prop_assume!((0..256).contains(&x));
        let x = x as u16;
        let y = transform::forward_map(x, b, n).unwrap();
        prop_assert!(y < (1 << n));
        prop_assert_eq!(transform::inverse_map(y, b, n), x);
    }

    #[test]
    fn entropy_bounded_by_field_width(seed in any::<u64>(), len in 1usize..4000) {
        let mut rng = enec::synth::SplitMix64::new(seed);
        let exponents: Vec<u16> = (0..len).map(|_| (rng.next_u64() % 32) as u16).collect();
        let hist = enec::analysis::ExponentHistogram::build(&exponents, 5).unwrap();
        let h = enec::analysis::entropy(&hist);
        prop_assert!((0.0..=5.0 + 1e-12).contains(&h), "{h}");
    }

    #[test]
    fn tile_scan_matches_serial(log_rows in 0u32..=6, seed in any::<u64>()) {
        let rows = 1usize << log_rows;
        let mut rng = enec::synth::SplitMix64::new(seed);
        let values: Vec<u16> = (0..rows * scan::LANES).map(|_| (rng.next_u64() & 1) as u16).collect();
        let tile = Tile::new(rows, values.clone()).unwrap();
        prop_assert_eq!(scan::tile_scan(&tile).into_values(), scan::serial_scan(&values));
    }

    #[test]
    fn container_round_trip_random_bytes((fmt, data) in format_strategy().prop_flat_map(|f| aligned_bytes(f, 1500).prop_map(move |d| (f, d)))) {
        // Worst-case payloads: raw fallback must keep this lossless.
        let opts = CompressOptions { block_size: 256, workers: 1, ..Default::default() };
        let file = stream::compress(&data, fmt, &opts).unwrap();
        prop_assert_eq!(stream::decompress(&file, 1).unwrap(), data);
    }

    #[test]
    fn container_round_trip_model_like(fmt in format_strategy(), count in 0usize..6000, seed in any::<u64>()) {
        let data = WeightProfile::for_format(fmt).generate(count, seed);
        let opts = CompressOptions { block_size: 1024, workers: 1, ..Default::default() };
        let file = stream::compress(&data, fmt, &opts).unwrap();
        prop_assert_eq!(stream::decompress(&file, 1).unwrap(), data);
    }

    #[test]
    fn container_bytes_worker_independent(count in 1usize..4000, seed in any::<u64>()) {
        let data = WeightProfile::bf16_language_model().generate(count, seed);
        let mk = |workers| {
            let opts = CompressOptions { block_size: 512, workers, ..Default::default() };
            stream::compress(&data, FloatFormat::Bf16, &opts).unwrap()
        };
        let one = mk(1);
        prop_assert_eq!(&mk(2), &one);
        prop_assert_eq!(&mk(0), &one);
    }

    #[test]
    fn transferred_params_stay_lossless(count in 1usize..3000, seed in any::<u64>()) {
        // Fixed bf16 parameters on fp16-range-free random exponents: blocks
        // outside the window must fall back raw and still reconstruct.
        let data = {
            let mut rng = enec::synth::SplitMix64::new(seed);
            let mut v = vec![0u8; count * 2];
            for b in &mut v { *b = rng.next_u64() as u8; }
            v
        };
        let opts = CompressOptions {
            block_size: 256,
            params: Some(TunedParams { b: 123, n: 6, m: 3, group_len: 16 }),
            workers: 1,
        };
        let file = stream::compress(&data, FloatFormat::Bf16, &opts).unwrap();
        prop_assert_eq!(stream::decompress(&file, 1).unwrap(), data);
    }
}

#[test]
fn split_residue_matches_fixed_packer() {
    // The split fast path must emit exactly the fixed packer's bytes.
    let mut rng = enec::synth::SplitMix64::new(1234);
    for fmt in [FloatFormat::Bf16, FloatFormat::Fp16, FloatFormat::Fp32] {
        let data: Vec<u8> = (0..512 * fmt.bytes_per_element())
            .map(|_| rng.next_u64() as u8)
            .collect();
        let payload = fpsplit::split(&data, fmt).unwrap();
        let residues = bitpack::fixed_unpack(&payload.residue, fmt.residue_bits(), payload.element_count).unwrap();
        let repacked = bitpack::fixed_pack(&residues, fmt.residue_bits()).unwrap();
        assert_eq!(repacked, payload.residue, "{fmt}");
    }
}

#[test]
fn hh_stream_width_mismatch_fails_round_trip_detectably() {
    let values: Vec<u16> = (0..64).map(|i| (i % 8) as u16).collect();
    let packed = bitpack::hh_pack(&values, 3).unwrap();
    let lied = PackedStream { width: 4, ..packed };
    // Wrong width changes the expected length, which the unpacker rejects.
    assert!(bitpack::hh_unpack(&lied).is_err());
}
