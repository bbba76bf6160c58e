//! Shell-level checks of the `enec` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use enec::ingest;
use enec::synth::WeightProfile;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_enec"))
}

fn work_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("enec-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn compress_decompress_round_trips_through_files() {
    let dir = work_dir();
    let input = dir.join("weights.bin");
    let container = dir.join("weights.enec");
    let restored = dir.join("weights.out");
    let data = WeightProfile::bf16_language_model().generate(20_000, 77);
    std::fs::write(&input, &data).unwrap();

    let out = run(&[
        "compress",
        path_str(&input),
        "--dtype",
        "bf16",
        "-o",
        path_str(&container),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = run(&[
        "decompress",
        path_str(&container),
        "-o",
        path_str(&restored),
    ]);
    assert!(out.status.success());
    assert_eq!(std::fs::read(&restored).unwrap(), data);

    let out = run(&["verify", path_str(&input), path_str(&container)]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("bit-identical: yes"), "{text}");
    assert!(text.contains("ratio"), "{text}");
}

#[test]
fn thread_count_does_not_change_container_bytes() {
    let dir = work_dir();
    let input = dir.join("threads.bin");
    std::fs::write(&input, WeightProfile::fp32_encoder().generate(50_000, 3)).unwrap();

    let mut files = Vec::new();
    for threads in ["1", "8"] {
        let out_path = dir.join(format!("threads-{threads}.enec"));
        let out = run(&[
            "compress",
            path_str(&input),
            "--dtype",
            "fp32",
            "--threads",
            threads,
            "-o",
            path_str(&out_path),
        ]);
        assert!(out.status.success());
        files.push(std::fs::read(&out_path).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn fixed_params_compress_matches_prediction_scale() {
    let dir = work_dir();
    let input = dir.join("fixed.bin");
    let container = dir.join("fixed.enec");
    std::fs::write(&input, WeightProfile::bf16_language_model().generate(200_000, 9)).unwrap();

    let out = run(&[
        "compress",
        path_str(&input),
        "--dtype",
        "bf16",
        "--params",
        "123,6,3,16",
        "-o",
        path_str(&container),
    ]);
    assert!(out.status.success());
    let original = std::fs::metadata(&input).unwrap().len() as f64;
    let compressed = std::fs::metadata(&container).unwrap().len() as f64;
    let ratio = original / compressed;
    assert!((ratio - 1.35).abs() < 0.05, "ratio {ratio}");
}

#[test]
fn tune_csv_has_the_documented_columns() {
    let dir = work_dir();
    let input = dir.join("tune.bin");
    let csv = dir.join("tune.csv");
    std::fs::write(&input, WeightProfile::bf16_language_model().generate(100_000, 21)).unwrap();

    let out = run(&[
        "tune",
        path_str(&input),
        "--dtype",
        "bf16",
        "--csv",
        path_str(&csv),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tensor_name,b,n,m,L,B_exp,predicted_CR"));
    let row = lines.next().unwrap();
    assert!(row.contains(",123,6,3,16,"), "{row}");
}

#[test]
fn bench_csv_schema_is_fixed() {
    let dir = work_dir();
    let input = dir.join("bench.bin");
    let csv = dir.join("bench.csv");
    std::fs::write(&input, WeightProfile::fp16_language_model().generate(30_000, 2)).unwrap();

    let out = run(&[
        "bench",
        path_str(&input),
        "--dtype",
        "fp16",
        "--repeat",
        "2",
        "--csv",
        path_str(&csv),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("model_name,dtype,compression_ratio_CR,compress_throughput_GBps,decompress_throughput_GBps")
    );
    assert!(text.lines().nth(1).unwrap().starts_with("bench,F16,"));
}

#[test]
fn safetensors_workflow_round_trips() {
    let dir = work_dir();
    let archive = dir.join("two.safetensors");
    let container = dir.join("two.enec");
    let a = WeightProfile::bf16_language_model().generate(5000, 4);
    let b = WeightProfile::bf16_language_model().generate(300, 5);
    let bytes = ingest::build_safetensors(&[
        ("layer.0.weight", "BF16", &[50, 100], &a),
        ("layer.1.weight", "BF16", &[300], &b),
    ]);
    std::fs::write(&archive, bytes).unwrap();

    let out = run(&[
        "compress",
        path_str(&archive),
        "--safetensors",
        "-o",
        path_str(&container),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = run(&[
        "verify",
        path_str(&archive),
        path_str(&container),
        "--safetensors",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn exit_codes_match_failure_classes() {
    let dir = work_dir();

    // Unknown flag: usage error, exit 2 (clap).
    let out = run(&["compress", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));

    // Missing input file: I/O error, exit 3.
    let out = run(&[
        "decompress",
        path_str(&dir.join("does-not-exist.enec")),
        "-o",
        path_str(&dir.join("x")),
    ]);
    assert_eq!(out.status.code(), Some(3));

    // Raw input without --dtype: format error, exit 4.
    let input = dir.join("nodtype.bin");
    std::fs::write(&input, [0u8; 4]).unwrap();
    let out = run(&["analyze", path_str(&input)]);
    assert_eq!(out.status.code(), Some(4));

    // Verification mismatch: exit 4.
    let container = dir.join("mismatch.enec");
    let data = WeightProfile::bf16_language_model().generate(1000, 6);
    std::fs::write(&input, &data).unwrap();
    let out = run(&[
        "compress",
        path_str(&input),
        "--dtype",
        "bf16",
        "-o",
        path_str(&container),
    ]);
    assert!(out.status.success());
    let mut tampered = data;
    tampered[17] ^= 0x40;
    let other = dir.join("other.bin");
    std::fs::write(&other, &tampered).unwrap();
    let out = run(&["verify", path_str(&other), path_str(&container)]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mismatch"));
}
