//! Mel-QCD signal codec and analysis toolkit.
//!
//! The library decomposes log-mel spectrograms into a quantized per-frame
//! semantic shape plus continuous energy and spread tracks, serializes the
//! result as a compact bit-exact stream, recomposes approximate mel maps
//! from it, and measures how the recomposition trades completeness against
//! complexity compared to simpler control signals (onset masks, energy
//! tracks, low-resolution mel maps).
//!
//! Module map:
//! - [`dsp`] — STFT, mel filterbank, log compression, Griffin-Lim inversion
//! - [`qcd`] — column-wise decomposition, quantization, down/upsampling
//! - [`codebook`] — bijective code-column indexing and factorized labels
//! - [`baselines`] — competing control-signal extractors
//! - [`metrics`] — onset/synchronization metrics and error accounting
//! - [`corpus`] — deterministic synthetic test signals and WAV I/O
//! - [`container`] — the `.mqcd` stream format and target export
//! - [`harness`] — corpus-wide comparison reports

pub mod baselines;
pub mod codebook;
pub mod container;
pub mod corpus;
pub mod dsp;
pub mod harness;
pub mod mat;
pub mod metrics;
pub mod qcd;

pub use codebook::SvqParams;
pub use dsp::{MelConfig, MelSpectrogram, StftConfig, Waveform};
pub use mat::Mat;
pub use qcd::{DownsampleSpec, FrequencyStrategy, QcdDecomposition, TemporalStrategy};
