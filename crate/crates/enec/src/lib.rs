//! Lossless compression for AI model weights.
//!
//! Floating-point model weights hide a highly compressible stream: the
//! exponent fields concentrate in a narrow band while signs and mantissas
//! are close to uniform noise. This crate splits the two apart, maps
//! exponents through a tuned branch-free linear transform into small codes,
//! stores each group of codes at one of two bit widths selected by a
//! per-group mask, and packs everything with a hierarchical halving bit
//! packer into a block-parallel container with random access per block.
//! Reconstruction is bit-identical for every input, including NaN, infinity
//! and denormal patterns; blocks that would not shrink are stored raw.
//!
//! Modules follow the pipeline:
//!
//! * [`fpsplit`] — field separation and recombination
//! * [`analysis`] — exponent histogram, entropy, rank-vs-value fit
//! * [`transform`] — the branch-free exponent mapping
//! * [`tuner`] — offline `(b, n, m, L)` parameter search
//! * [`bitpack`] — group classification and the bit packers
//! * [`scan`] — tile prefix sums feeding decode offsets
//! * [`stream`] — the `.enec` container codec
//! * [`ingest`] — raw and safetensors input
//! * [`synth`] — calibrated synthetic weight generators

pub mod analysis;
pub mod bitpack;
pub mod error;
pub mod format;
pub mod fpsplit;
pub mod ingest;
pub mod scan;
pub mod stream;
pub mod synth;
pub mod transform;
pub mod tuner;

pub use error::{Error, Result};
pub use format::FloatFormat;
pub use stream::{CompressOptions, RatioReport, TensorInput};
pub use tuner::TunedParams;
