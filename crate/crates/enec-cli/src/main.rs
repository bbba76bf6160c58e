//! `enec` — compress, inspect and verify model-weight files.
//!
//! Exit codes: 0 success, 2 usage, 3 I/O, 4 format error or verification
//! mismatch.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use enec::analysis;
use enec::ingest::{self, TensorSource};
use enec::stream::{self, CompressOptions};
use enec::tuner::{self, TunedParams};
use enec::{Error, FloatFormat};

/// Print a line, exiting quietly when the downstream pipe is closed
/// (e.g. `enec analyze … | head`).
fn emit(args: std::fmt::Arguments) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if out
        .write_fmt(args)
        .and_then(|()| out.write_all(b"\n"))
        .is_err()
    {
        std::process::exit(0);
    }
}

macro_rules! say {
    ($($t:tt)*) => { emit(format_args!($($t)*)) };
}

#[derive(Parser)]
#[command(name = "enec", version, about = "Lossless compressor for model weights")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct InputArgs {
    /// Input file: raw little-endian weights or a safetensors archive.
    input: PathBuf,
    /// Element dtype of raw input (bf16, fp16, fp32).
    #[arg(long)]
    dtype: Option<FloatFormat>,
    /// Treat the input as a safetensors archive (dtype read per tensor).
    #[arg(long)]
    safetensors: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exponent statistics: histogram range, entropy, rank-vs-value fit.
    Analyze {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Search compression parameters per tensor and report expected bits.
    Tune {
        #[command(flatten)]
        input: InputArgs,
        /// Also write the per-tensor rows as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = stream::DEFAULT_BLOCK_SIZE)]
        block_size: u32,
    },
    /// Compress into an .enec container.
    Compress {
        #[command(flatten)]
        input: InputArgs,
        #[arg(short, long)]
        output: PathBuf,
        /// Fixed parameters b,n,m,L instead of tuning (e.g. 123,6,3,16).
        #[arg(long, value_parser = parse_params)]
        params: Option<TunedParams>,
        /// Codec worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[arg(long, default_value_t = stream::DEFAULT_BLOCK_SIZE)]
        block_size: u32,
    },
    /// Decompress an .enec container back to raw bytes.
    Decompress {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Check bit-identical reconstruction and report the ratio.
    Verify {
        /// The original input the container was compressed from.
        original: PathBuf,
        /// The .enec container.
        compressed: PathBuf,
        #[arg(long)]
        dtype: Option<FloatFormat>,
        #[arg(long)]
        safetensors: bool,
    },
    /// Round-trip timing and ratio report.
    Bench {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Timed repetitions; the mean is reported.
        #[arg(long, default_value_t = 3)]
        repeat: u32,
        #[arg(long, default_value_t = stream::DEFAULT_BLOCK_SIZE)]
        block_size: u32,
    },
}

fn parse_params(s: &str) -> Result<TunedParams, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err("expected four comma-separated values: b,n,m,L".into());
    }
    let num = |i: usize| parts[i].parse::<u32>().map_err(|e| format!("{}: {e}", parts[i]));
    Ok(TunedParams {
        b: num(0)? as u16,
        n: num(1)? as u8,
        m: num(2)? as u8,
        group_len: num(3)?,
    })
}

/// Tensors of one input file, all sharing a format, plus the backing bytes.
struct Loaded {
    format: FloatFormat,
    bytes: Vec<u8>,
    data_start: usize,
    tensors: Vec<TensorSource>,
}

impl Loaded {
    fn tensor_data(&self, t: &TensorSource) -> &[u8] {
        let start = self.data_start + t.offset;
        &self.bytes[start..start + t.length]
    }

    /// Concatenation of all tensor payloads in container order.
    fn concatenated(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.tensors.iter().map(|t| t.length).sum());
        for t in &self.tensors {
            out.extend_from_slice(self.tensor_data(t));
        }
        out
    }
}

fn load(path: &Path, dtype: Option<FloatFormat>, safetensors: bool) -> Result<Loaded, Error> {
    if safetensors {
        let st = ingest::load_safetensors(path, false)?;
        for (name, dtype) in &st.skipped {
            eprintln!("skipping tensor `{name}` with unsupported dtype {dtype}");
        }
        let format = st.uniform_dtype()?;
        Ok(Loaded {
            format,
            data_start: st.data_start,
            tensors: st.tensors,
            bytes: st.bytes,
        })
    } else {
        let format = dtype.ok_or_else(|| {
            Error::Format("--dtype is required for raw input (or pass --safetensors)".into())
        })?;
        let (bytes, source) = ingest::load_raw(path, format)?;
        Ok(Loaded {
            format,
            bytes,
            data_start: 0,
            tensors: vec![source],
        })
    }
}

fn display_name(t: &TensorSource, index: usize) -> String {
    if t.name.is_empty() {
        format!("tensor[{index}]")
    } else {
        t.name.clone()
    }
}

fn run_analyze(input: InputArgs) -> Result<(), Error> {
    let loaded = load(&input.input, input.dtype, input.safetensors)?;
    let fmt = loaded.format;
    for (i, t) in loaded.tensors.iter().enumerate() {
        let data = loaded.tensor_data(t);
        let elements = data.len() / fmt.bytes_per_element();
        say!("{}: {} elements, {}", display_name(t, i), elements, fmt);
        if elements == 0 {
            continue;
        }
        let hist = stream::exponent_histogram(data, fmt, 0)?;
        let h = analysis::entropy(&hist);
        say!(
            "  exponent range: {}..={} ({} distinct), entropy {:.4} bits",
            hist.min_exp(),
            hist.max_exp(),
            hist.distinct_values(),
            h
        );
        match analysis::rank_fit(&hist) {
            Ok(fit) => say!(
                "  rank fit: rank = {:.2} * exponent + {:.2}  (r^2 = {:.3})",
                fit.slope, fit.intercept, fit.r_squared
            ),
            Err(Error::DegenerateInput) => {
                say!("  rank fit: n/a (single exponent value)")
            }
            Err(e) => return Err(e),
        }
        let mut top: Vec<(u16, f64)> = hist.occupied().collect();
        top.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        let line = top
            .iter()
            .take(5)
            .fold(String::new(), |mut acc, (x, p)| {
                let _ = write!(acc, " {x} ({:.1}%)", p * 100.0);
                acc
            });
        say!("  top exponents:{line}");
    }
    Ok(())
}

fn tune_rows(loaded: &Loaded, block_size: u32) -> Result<Vec<(String, TunedParams, f64, f64)>, Error> {
    let fmt = loaded.format;
    let candidates = tuner::default_group_lengths(block_size);
    let mut rows = Vec::new();
    for (i, t) in loaded.tensors.iter().enumerate() {
        let data = loaded.tensor_data(t);
        if data.is_empty() {
            continue;
        }
        let hist = stream::exponent_histogram(data, fmt, 0)?;
        let params = tuner::tune(&hist, &candidates);
        let bits = tuner::expected_bits_for(&hist, &params)?;
        let predicted = fmt.total_bits() as f64 / (fmt.residue_bits() as f64 + bits);
        rows.push((display_name(t, i), params, bits, predicted));
    }
    Ok(rows)
}

fn run_tune(input: InputArgs, csv: Option<PathBuf>, block_size: u32) -> Result<(), Error> {
    let loaded = load(&input.input, input.dtype, input.safetensors)?;
    let rows = tune_rows(&loaded, block_size)?;
    let mut csv_text = String::from("tensor_name,b,n,m,L,B_exp,predicted_CR\n");
    for (name, p, bits, predicted) in &rows {
        say!(
            "{name}: (b, n, m, L) = ({}, {}, {}, {}), expected exponent bits {:.4}, predicted ratio {:.4}",
            p.b, p.n, p.m, p.group_len, bits, predicted
        );
        let _ = writeln!(
            csv_text,
            "{name},{},{},{},{},{:.6},{:.6}",
            p.b, p.n, p.m, p.group_len, bits, predicted
        );
    }
    if let Some(path) = csv {
        std::fs::write(&path, csv_text)?;
        say!("wrote {}", path.display());
    }
    Ok(())
}

fn run_compress(
    input: InputArgs,
    output: PathBuf,
    params: Option<TunedParams>,
    threads: usize,
    block_size: u32,
) -> Result<(), Error> {
    let loaded = load(&input.input, input.dtype, input.safetensors)?;
    let opts = CompressOptions {
        block_size,
        params,
        workers: threads,
    };
    let inputs: Vec<stream::TensorInput> = loaded
        .tensors
        .iter()
        .map(|t| stream::TensorInput {
            name: &t.name,
            data: loaded.tensor_data(t),
        })
        .collect();
    let started = Instant::now();
    let file = stream::compress_tensors(&inputs, loaded.format, &opts)?;
    let elapsed = started.elapsed().as_secs_f64();
    std::fs::write(&output, &file)?;
    let original: usize = inputs.iter().map(|t| t.data.len()).sum();
    say!(
        "compressed {} -> {} bytes (ratio {:.4}) in {:.3}s ({:.2} GB/s)",
        original,
        file.len(),
        original as f64 / file.len().max(1) as f64,
        elapsed,
        original as f64 / 1e9 / elapsed.max(1e-9)
    );
    Ok(())
}

fn run_decompress(input: PathBuf, output: PathBuf, threads: usize) -> Result<(), Error> {
    let file = std::fs::read(&input)?;
    let started = Instant::now();
    let bytes = stream::decompress(&file, threads)?;
    let elapsed = started.elapsed().as_secs_f64();
    std::fs::write(&output, &bytes)?;
    say!(
        "decompressed {} -> {} bytes in {:.3}s ({:.2} GB/s)",
        file.len(),
        bytes.len(),
        elapsed,
        bytes.len() as f64 / 1e9 / elapsed.max(1e-9)
    );
    Ok(())
}

fn run_verify(
    original: PathBuf,
    compressed: PathBuf,
    dtype: Option<FloatFormat>,
    safetensors: bool,
) -> Result<(), Error> {
    let reference = if safetensors {
        load(&original, dtype, true)?.concatenated()
    } else {
        std::fs::read(&original)?
    };
    let file = std::fs::read(&compressed)?;
    let report = stream::verify(&reference, &file)?;
    say!(
        "bit-identical: yes ({} bytes), ratio {:.4}, exponent bits/element {:.4}, formula ratio {:.4}",
        report.original_bytes,
        report.compression_ratio,
        report.exponent_bits_per_element,
        report.formula_ratio
    );
    Ok(())
}

fn run_bench(
    input: InputArgs,
    csv: Option<PathBuf>,
    threads: usize,
    repeat: u32,
    block_size: u32,
) -> Result<(), Error> {
    let loaded = load(&input.input, input.dtype, input.safetensors)?;
    let opts = CompressOptions {
        block_size,
        params: None,
        workers: threads,
    };
    let inputs: Vec<stream::TensorInput> = loaded
        .tensors
        .iter()
        .map(|t| stream::TensorInput {
            name: &t.name,
            data: loaded.tensor_data(t),
        })
        .collect();
    let original: usize = inputs.iter().map(|t| t.data.len()).sum();
    let reference = loaded.concatenated();

    let repeat = repeat.max(1);
    let wall = Instant::now();
    let mut compress_secs = 0.0;
    let mut decompress_secs = 0.0;
    let mut file = Vec::new();
    for _ in 0..repeat {
        let t = Instant::now();
        file = stream::compress_tensors(&inputs, loaded.format, &opts)?;
        compress_secs += t.elapsed().as_secs_f64();
        let t = Instant::now();
        let back = stream::decompress(&file, threads)?;
        decompress_secs += t.elapsed().as_secs_f64();
        if back != reference {
            return Err(Error::Mismatch {
                offset: reference
                    .iter()
                    .zip(&back)
                    .position(|(a, b)| a != b)
                    .unwrap_or(reference.len().min(back.len())),
            });
        }
    }
    let wall = wall.elapsed().as_secs_f64();
    let ratio = original as f64 / file.len().max(1) as f64;
    let comp_gbps = original as f64 * repeat as f64 / 1e9 / compress_secs.max(1e-9);
    let deco_gbps = original as f64 * repeat as f64 / 1e9 / decompress_secs.max(1e-9);
    let name = input
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".into());

    say!(
        "{name}: {} bytes, ratio {ratio:.4}, compress {comp_gbps:.3} GB/s, decompress {deco_gbps:.3} GB/s, wall {wall:.3}s ({repeat} runs)",
        original
    );
    if let Some(path) = csv {
        let mut text = String::from(
            "model_name,dtype,compression_ratio_CR,compress_throughput_GBps,decompress_throughput_GBps\n",
        );
        let _ = writeln!(
            text,
            "{name},{},{ratio:.4},{comp_gbps:.4},{deco_gbps:.4}",
            loaded.format.dtype_name()
        );
        std::fs::write(&path, text)?;
        say!("wrote {}", path.display());
    }
    Ok(())
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io(_) => 3,
        _ => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Analyze { input } => run_analyze(input),
        Cmd::Tune { input, csv, block_size } => run_tune(input, csv, block_size),
        Cmd::Compress { input, output, params, threads, block_size } => {
            run_compress(input, output, params, threads, block_size)
        }
        Cmd::Decompress { input, output, threads } => run_decompress(input, output, threads),
        Cmd::Verify { original, compressed, dtype, safetensors } => {
            run_verify(original, compressed, dtype, safetensors)
        }
        Cmd::Bench { input, csv, threads, repeat, block_size } => {
            run_bench(input, csv, threads, repeat, block_size)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
