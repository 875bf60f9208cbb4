//! Bit-exact stream serialization (the `.mqcd` format) and target export.
//!
//! Layout, all little-endian:
//!
//! ```text
//! offset  size  field
//!      0     4  magic "MQCD"
//!      4     2  version (1 = u8 code parts, 2 = u16 code parts)
//!      6     4  sample_rate_hz (u32)
//!     10     4  hop (u32)
//!     14     2  K, full mel bins (u16)
//!     16     2  K', reduced bins (u16)
//!     18     2  lambda (u16)
//!     20     1  temporal strategy code
//!     21     1  frequency strategy code
//!     22     2  temporal factor (u16)
//!     24     4  T', stored frames (u32)
//!     28     4  reserved, zero
//!     32     -  codes: T' frames x 2 parts (u8 for v1, u16 LE for v2)
//!      ...   -  energy: T' x f32
//!      ...   -  std:    T' x f32
//! ```
//!
//! A version-1 file is exactly `32 + 10 * T'` bytes. Serialization is
//! canonical: equal streams produce identical bytes.

use crate::codebook::{self, SvqParams};
use crate::dsp::{self, MelConfig, MelSpectrogram};
use crate::mat::Mat;
use crate::qcd::{self, DownsampleSpec, FrequencyStrategy, QuantizedSemantic, TemporalStrategy};
use num_bigint::BigUint;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"MQCD";
const HEADER_LEN: usize = 32;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("not an MQCD stream")]
    NotMqcdStream,
    #[error("unsupported version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated stream: expected {expected} bytes, got {got}")]
    Truncated { expected: usize, got: usize },
    #[error("invalid header: {0}")]
    InvalidHeader(String),
    #[error("config mismatch: {0}")]
    ConfigMismatch(String),
    #[error("unsupported config: factorized part range exceeds 16 bits")]
    PartRangeTooLarge,
    #[error(transparent)]
    Qcd(#[from] qcd::QcdError),
    #[error(transparent)]
    Codebook(#[from] codebook::CodebookError),
    #[error(transparent)]
    Dsp(#[from] dsp::DspError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Bytes needed to store one factorized code part for these parameters.
/// The stream layout supports 1 (version 1) and 2 (version 2); wider
/// ranges report their natural width and are rejected at encode time.
pub fn bytes_per_part(p: &SvqParams) -> usize {
    let range = p.part_range();
    if range <= BigUint::from(1u32 << 8) {
        1
    } else if range <= BigUint::from(1u32 << 16) {
        2
    } else {
        4
    }
}

fn temporal_code(s: TemporalStrategy) -> u8 {
    match s {
        TemporalStrategy::RepeatDownsample => 0,
        TemporalStrategy::Original => 1,
        TemporalStrategy::SavgolSmooth => 2,
        TemporalStrategy::MeanPool => 3,
    }
}

fn temporal_from_code(c: u8) -> Result<TemporalStrategy, ContainerError> {
    Ok(match c {
        0 => TemporalStrategy::RepeatDownsample,
        1 => TemporalStrategy::Original,
        2 => TemporalStrategy::SavgolSmooth,
        3 => TemporalStrategy::MeanPool,
        _ => {
            return Err(ContainerError::InvalidHeader(format!(
                "unknown temporal strategy {c}"
            )))
        }
    })
}

fn frequency_code(s: FrequencyStrategy) -> u8 {
    match s {
        FrequencyStrategy::DsRepeat => 0,
        FrequencyStrategy::DsSparse => 1,
        FrequencyStrategy::Mel8Repeat => 2,
        FrequencyStrategy::Mel8Sparse => 3,
    }
}

fn frequency_from_code(c: u8) -> Result<FrequencyStrategy, ContainerError> {
    Ok(match c {
        0 => FrequencyStrategy::DsRepeat,
        1 => FrequencyStrategy::DsSparse,
        2 => FrequencyStrategy::Mel8Repeat,
        3 => FrequencyStrategy::Mel8Sparse,
        _ => {
            return Err(ContainerError::InvalidHeader(format!(
                "unknown frequency strategy {c}"
            )))
        }
    })
}

/// A serialized quantized-decomposition stream: codec parameters, one
/// factorized label pair per stored frame, and the two continuous tracks.
#[derive(Debug, Clone, PartialEq)]
pub struct QcdStream {
    pub version: u16,
    pub sample_rate_hz: u32,
    pub hop: u32,
    /// Full mel resolution (K).
    pub num_bins: u16,
    /// Reduced resolution (K').
    pub reduced_bins: u16,
    pub lambda: u16,
    pub temporal_strategy: TemporalStrategy,
    pub freq_strategy: FrequencyStrategy,
    pub temporal_factor: u16,
    /// Code label pairs, `(low-frequency group, high-frequency group)`,
    /// one per stored frame.
    pub codes: Vec<(u16, u16)>,
    pub energy: Vec<f32>,
    pub std: Vec<f32>,
}

impl QcdStream {
    pub fn stored_frames(&self) -> usize {
        self.codes.len()
    }

    /// Full frame count after temporal recovery.
    pub fn full_frames(&self) -> usize {
        self.stored_frames() * self.temporal_factor as usize
    }

    pub fn svq_params(&self) -> SvqParams {
        SvqParams {
            lambda: self.lambda as u32,
            dims: self.reduced_bins as usize,
            factor_split: 2,
        }
    }

    pub fn downsample_spec(&self) -> DownsampleSpec {
        DownsampleSpec {
            temporal_strategy: self.temporal_strategy,
            temporal_factor: self.temporal_factor as usize,
            freq_strategy: self.freq_strategy,
            freq_out: self.reduced_bins as usize,
            ..DownsampleSpec::default()
        }
    }

    /// Exact serialized size in bytes.
    pub fn byte_len(&self) -> usize {
        let part_bytes = if self.version == 1 { 1 } else { 2 };
        HEADER_LEN + self.stored_frames() * (2 * part_bytes + 8)
    }
}

/// Encodes a mel map under the pooled frequency strategies.
///
/// The energy and std tracks come from the full-resolution columns; the
/// shape is frequency-pooled, temporally reduced, quantized, and
/// factorized. The `mel8` strategies need the waveform and go through
/// [`encode_stream_from_waveform`].
pub fn encode_stream(
    m: &MelSpectrogram,
    spec: &DownsampleSpec,
    p: &SvqParams,
) -> Result<QcdStream, ContainerError> {
    if !spec.freq_strategy.pools_full_resolution() {
        return Err(ContainerError::ConfigMismatch(
            "mel re-analysis strategies need the waveform; use encode_stream_from_waveform".into(),
        ));
    }
    let d = qcd::decompose(m);
    let reduced = qcd::downsample_frequency(&d.semantic, spec)?;
    finish_encode(m, &d.energy, &d.std, &reduced, spec, p)
}

/// Encodes from audio, dispatching on the frequency strategy: pooled
/// strategies reduce the full-resolution shape, the `mel8` strategies
/// re-analyze with a `K'`-bin filterbank and decompose that. Energy and
/// std always come from the full-resolution analysis.
pub fn encode_stream_from_waveform(
    w: &dsp::Waveform,
    cfg: &MelConfig,
    spec: &DownsampleSpec,
    p: &SvqParams,
) -> Result<(MelSpectrogram, QcdStream), ContainerError> {
    let m = dsp::mel_spectrogram(w, cfg)?;
    let stream = if spec.freq_strategy.pools_full_resolution() {
        encode_stream(&m, spec, p)?
    } else {
        let low = dsp::mel_spectrogram(w, &cfg.with_bins(spec.freq_out))?;
        let d_full = qcd::decompose(&m);
        let d_low = qcd::decompose(&low);
        finish_encode(&m, &d_full.energy, &d_full.std, &d_low.semantic, spec, p)?
    };
    Ok((m, stream))
}

fn finish_encode(
    m: &MelSpectrogram,
    energy: &[f64],
    std: &[f64],
    reduced_shape: &Mat,
    spec: &DownsampleSpec,
    p: &SvqParams,
) -> Result<QcdStream, ContainerError> {
    p.validate()?;
    spec.validate(m.num_bins, m.frames())
        .map_err(|e| ContainerError::ConfigMismatch(e.to_string()))?;
    if p.dims != spec.freq_out {
        return Err(ContainerError::ConfigMismatch(format!(
            "codebook dims {} != reduced bins {}",
            p.dims, spec.freq_out
        )));
    }
    if p.factor_split != 2 {
        return Err(ContainerError::ConfigMismatch(
            "stream layout stores exactly two factorized parts".into(),
        ));
    }
    if bytes_per_part(p) > 2 {
        return Err(ContainerError::PartRangeTooLarge);
    }

    let s_reduced = qcd::downsample_temporal_matrix(reduced_shape, spec)?;
    let quantized = qcd::quantize_semantic(&s_reduced, p.lambda)?;
    let energy_r = qcd::downsample_temporal(energy, spec)?;
    // Smoothing can undershoot at transients; spread stays non-negative.
    let std_r: Vec<f64> = qcd::downsample_temporal(std, spec)?
        .into_iter()
        .map(|v| v.max(0.0))
        .collect();

    let mut codes = Vec::with_capacity(quantized.frames);
    for t in 0..quantized.frames {
        let index = codebook::encode_index(quantized.col(t), p)?;
        let label = codebook::factorize_label(&index, p)?;
        let to_u16 = |b: &BigUint| -> u16 {
            let digits = b.to_u64_digits();
            digits.first().copied().unwrap_or(0) as u16
        };
        codes.push((to_u16(&label.parts[0]), to_u16(&label.parts[1])));
    }

    let version = if bytes_per_part(p) == 1 { 1 } else { 2 };
    Ok(QcdStream {
        version,
        sample_rate_hz: m.sample_rate_hz(),
        hop: m.params.stft.hop as u32,
        num_bins: m.num_bins as u16,
        reduced_bins: spec.freq_out as u16,
        lambda: p.lambda as u16,
        temporal_strategy: spec.temporal_strategy,
        freq_strategy: spec.freq_strategy,
        temporal_factor: spec.effective_temporal_factor() as u16,
        codes,
        energy: energy_r.iter().map(|&v| v as f32).collect(),
        std: std_r.iter().map(|&v| v as f32).collect(),
    })
}

/// Recomposes the `K x T` control map carried by a stream.
pub fn decode_stream(s: &QcdStream) -> Result<Mat, ContainerError> {
    let p = s.svq_params();
    let spec = s.downsample_spec();
    let kp = s.reduced_bins as usize;
    let frames = s.stored_frames();
    let mut codes = vec![0i32; kp * frames];
    for (t, (hi, lo)) in s.codes.iter().enumerate() {
        let label = codebook::FactorizedLabel {
            parts: vec![BigUint::from(*hi), BigUint::from(*lo)],
        };
        let index = codebook::defactorize_label(&label, &p)?;
        let column = codebook::decode_index(&index, &p)?;
        codes[t * kp..(t + 1) * kp].copy_from_slice(&column);
    }
    let quantized = QuantizedSemantic {
        codes,
        num_bins: kp,
        frames,
        lambda: s.lambda as u32,
    };
    let energy: Vec<f64> = s.energy.iter().map(|&v| v as f64).collect();
    let std: Vec<f64> = s.std.iter().map(|&v| v as f64).collect();
    Ok(qcd::recompose_qcd(
        &quantized,
        &energy,
        &std,
        &spec,
        s.num_bins as usize,
        s.full_frames(),
    )?)
}

/// Serializes to the canonical byte layout.
pub fn serialize(s: &QcdStream) -> Vec<u8> {
    let mut out = Vec::with_capacity(s.byte_len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&s.version.to_le_bytes());
    out.extend_from_slice(&s.sample_rate_hz.to_le_bytes());
    out.extend_from_slice(&s.hop.to_le_bytes());
    out.extend_from_slice(&s.num_bins.to_le_bytes());
    out.extend_from_slice(&s.reduced_bins.to_le_bytes());
    out.extend_from_slice(&s.lambda.to_le_bytes());
    out.push(temporal_code(s.temporal_strategy));
    out.push(frequency_code(s.freq_strategy));
    out.extend_from_slice(&s.temporal_factor.to_le_bytes());
    out.extend_from_slice(&(s.stored_frames() as u32).to_le_bytes());
    out.extend_from_slice(&[0u8; 4]);
    debug_assert_eq!(out.len(), HEADER_LEN);
    for (hi, lo) in &s.codes {
        if s.version == 1 {
            out.push(*hi as u8);
            out.push(*lo as u8);
        } else {
            out.extend_from_slice(&hi.to_le_bytes());
            out.extend_from_slice(&lo.to_le_bytes());
        }
    }
    for e in &s.energy {
        out.extend_from_slice(&e.to_le_bytes());
    }
    for d in &s.std {
        out.extend_from_slice(&d.to_le_bytes());
    }
    out
}

/// Parses the canonical byte layout back into a stream.
pub fn parse(bytes: &[u8]) -> Result<QcdStream, ContainerError> {
    if bytes.len() < 4 || &bytes[0..4] != MAGIC {
        return Err(ContainerError::NotMqcdStream);
    }
    if bytes.len() < HEADER_LEN {
        return Err(ContainerError::Truncated {
            expected: HEADER_LEN,
            got: bytes.len(),
        });
    }
    let u16_at = |o: usize| u16::from_le_bytes(bytes[o..o + 2].try_into().unwrap());
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u16_at(4);
    if version != 1 && version != 2 {
        return Err(ContainerError::UnsupportedVersion(version));
    }
    let sample_rate_hz = u32_at(6);
    let hop = u32_at(10);
    let num_bins = u16_at(14);
    let reduced_bins = u16_at(16);
    let lambda = u16_at(18);
    let temporal_strategy = temporal_from_code(bytes[20])?;
    let freq_strategy = frequency_from_code(bytes[21])?;
    let temporal_factor = u16_at(22);
    let frames = u32_at(24) as usize;
    if lambda == 0 || reduced_bins == 0 || temporal_factor == 0 || num_bins == 0 {
        return Err(ContainerError::InvalidHeader(
            "zero-valued codec parameter".into(),
        ));
    }
    if num_bins % reduced_bins != 0 {
        return Err(ContainerError::InvalidHeader(format!(
            "reduced bins {reduced_bins} do not divide {num_bins}"
        )));
    }

    let part_bytes = if version == 1 { 1 } else { 2 };
    let expected = HEADER_LEN + frames * (2 * part_bytes + 8);
    if bytes.len() != expected {
        return Err(ContainerError::Truncated {
            expected,
            got: bytes.len(),
        });
    }

    let p = SvqParams {
        lambda: lambda as u32,
        dims: reduced_bins as usize,
        factor_split: 2,
    };
    let part_limit = p.part_range();
    let mut pos = HEADER_LEN;
    let mut codes = Vec::with_capacity(frames);
    for _ in 0..frames {
        let (hi, lo) = if version == 1 {
            let pair = (bytes[pos] as u16, bytes[pos + 1] as u16);
            pos += 2;
            pair
        } else {
            let pair = (u16_at(pos), u16_at(pos + 2));
            pos += 4;
            pair
        };
        if BigUint::from(hi) >= part_limit || BigUint::from(lo) >= part_limit {
            return Err(ContainerError::InvalidHeader(format!(
                "code part out of range: ({hi}, {lo})"
            )));
        }
        codes.push((hi, lo));
    }
    let read_f32s = |n: usize, pos: &mut usize| -> Vec<f32> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(f32::from_le_bytes(
                bytes[*pos..*pos + 4].try_into().unwrap(),
            ));
            *pos += 4;
        }
        out
    };
    let energy = read_f32s(frames, &mut pos);
    let std = read_f32s(frames, &mut pos);
    if std.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(ContainerError::InvalidHeader(
            "negative or non-finite std entry".into(),
        ));
    }

    Ok(QcdStream {
        version,
        sample_rate_hz,
        hop,
        num_bins,
        reduced_bins,
        lambda,
        temporal_strategy,
        freq_strategy,
        temporal_factor,
        codes,
        energy,
        std,
    })
}

pub fn write_stream(s: &QcdStream, path: &Path) -> Result<(), ContainerError> {
    std::fs::File::create(path)?.write_all(&serialize(s))?;
    Ok(())
}

pub fn read_stream(path: &Path) -> Result<QcdStream, ContainerError> {
    parse(&std::fs::read(path)?)
}

/// Writes per-frame training targets: `frame,label_hi,label_lo,energy,std`
/// with one row per stored frame. Floats use the shortest round-trip
/// decimal form, so re-importing reproduces the stream arrays exactly.
pub fn export_targets(s: &QcdStream, path: &Path) -> Result<(), ContainerError> {
    let mut out = String::from("frame,label_hi,label_lo,energy,std\n");
    for (t, (hi, lo)) in s.codes.iter().enumerate() {
        out.push_str(&format!("{t},{hi},{lo},{},{}\n", s.energy[t], s.std[t]));
    }
    std::fs::File::create(path)?.write_all(out.as_bytes())?;
    Ok(())
}
