//! Deterministic synthetic test signals and WAV file I/O.
//!
//! Every generator is a pure function of its spec (including the seed), so
//! corpus items are bit-reproducible across runs and machines. The WAV
//! layer reads mono or stereo RIFF files in 16-bit PCM or 32-bit float and
//! writes 16-bit PCM mono, little-endian throughout.

use crate::dsp::Waveform;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid frequency: {freq} Hz at sample rate {sample_rate}")]
    InvalidFrequency { freq: f64, sample_rate: u32 },
    #[error("invalid duration: {0}")]
    InvalidDuration(f64),
    #[error("not a WAV file: {0}")]
    NotAWavFile(String),
    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// What to synthesize.
#[derive(Debug, Clone, PartialEq)]
pub enum SynthKind {
    /// Single-sample clicks at integer multiples of `1/rate_hz` seconds.
    ImpulseTrain { rate_hz: f64 },
    /// Steady tone with a 10 ms raised-cosine attack and release.
    Tone { freq_hz: f64 },
    /// Linear frequency sweep.
    Chirp { f0_hz: f64, f1_hz: f64 },
    /// White noise with sinusoidal amplitude modulation.
    AmNoise { mod_rate_hz: f64 },
    /// Repeating pair of a shot-like transient and a decaying broadband
    /// tail.
    TwoEvent { rate_hz: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub duration_s: f64,
    pub sample_rate_hz: u32,
    pub seed: u64,
}

impl SynthSpec {
    fn check_freq(&self, freq: f64) -> Result<(), CorpusError> {
        if !freq.is_finite() || freq <= 0.0 || freq >= self.sample_rate_hz as f64 / 2.0 {
            return Err(CorpusError::InvalidFrequency {
                freq,
                sample_rate: self.sample_rate_hz,
            });
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if !self.duration_s.is_finite() || self.duration_s <= 0.0 {
            return Err(CorpusError::InvalidDuration(self.duration_s));
        }
        match self.kind {
            SynthKind::ImpulseTrain { rate_hz } => {
                if !rate_hz.is_finite() || rate_hz <= 0.0 {
                    return Err(CorpusError::InvalidFrequency {
                        freq: rate_hz,
                        sample_rate: self.sample_rate_hz,
                    });
                }
            }
            SynthKind::Tone { freq_hz } => self.check_freq(freq_hz)?,
            SynthKind::Chirp { f0_hz, f1_hz } => {
                self.check_freq(f0_hz)?;
                self.check_freq(f1_hz)?;
            }
            SynthKind::AmNoise { mod_rate_hz } => self.check_freq(mod_rate_hz)?,
            SynthKind::TwoEvent { rate_hz } => {
                if !rate_hz.is_finite() || rate_hz <= 0.0 {
                    return Err(CorpusError::InvalidFrequency {
                        freq: rate_hz,
                        sample_rate: self.sample_rate_hz,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Renders a spec to audio. Deterministic given the seed.
pub fn synthesize(spec: &SynthSpec) -> Result<Waveform, CorpusError> {
    spec.validate()?;
    let sr = spec.sample_rate_hz;
    let n = (spec.duration_s * sr as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let tau = 2.0 * std::f64::consts::PI;

    let samples = match spec.kind {
        SynthKind::ImpulseTrain { rate_hz } => {
            let mut samples = vec![0.0; n];
            let mut k = 0u64;
            loop {
                let idx = (k as f64 / rate_hz * sr as f64).round() as usize;
                if idx >= n {
                    break;
                }
                samples[idx] = 1.0;
                k += 1;
            }
            samples
        }
        SynthKind::Tone { freq_hz } => {
            // Fast attack, slow release, and a 50 ms silent tail: the slow
            // release keeps envelope sidebands inside one bin, and the
            // tail makes the analysis padding reflect silence instead of
            // a phase-reversed tone.
            let (attack, release) = ((sr as f64 * 0.01) as usize, (sr as f64 * 0.1) as usize);
            let active = n.saturating_sub((sr as f64 * 0.05) as usize).max(1);
            (0..n)
                .map(|i| {
                    if i >= active {
                        return 0.0;
                    }
                    let env = fade_env(i, active, attack, release);
                    0.5 * env * (tau * freq_hz * i as f64 / sr as f64).sin()
                })
                .collect()
        }
        SynthKind::Chirp { f0_hz, f1_hz } => {
            let (attack, release) = ((sr as f64 * 0.01) as usize, (sr as f64 * 0.1) as usize);
            let active = n.saturating_sub((sr as f64 * 0.05) as usize).max(1);
            let rate = (f1_hz - f0_hz) / spec.duration_s;
            (0..n)
                .map(|i| {
                    if i >= active {
                        return 0.0;
                    }
                    let t = i as f64 / sr as f64;
                    let phase = tau * (f0_hz * t + 0.5 * rate * t * t);
                    0.5 * fade_env(i, active, attack, release) * phase.sin()
                })
                .collect()
        }
        SynthKind::AmNoise { mod_rate_hz } => (0..n)
            .map(|i| {
                let t = i as f64 / sr as f64;
                let env = 0.5 + 0.5 * (tau * mod_rate_hz * t).sin();
                0.4 * env * rng.random_range(-1.0..1.0)
            })
            .collect(),
        SynthKind::TwoEvent { rate_hz } => {
            // A short loud burst followed by an exponentially decaying
            // broadband tail, repeating at rate_hz.
            let mut samples = vec![0.0; n];
            let period = (sr as f64 / rate_hz).round() as usize;
            let burst = (sr as f64 * 0.012) as usize;
            let tail = (sr as f64 * 0.5) as usize;
            let mut start = 0usize;
            while start < n {
                for i in 0..burst.min(n - start) {
                    samples[start + i] += 0.9 * rng.random_range(-1.0..1.0);
                }
                let tail_start = start + burst;
                let mut lp = 0.0;
                for i in 0..tail.min(n.saturating_sub(tail_start)) {
                    let decay = (-6.0 * i as f64 / tail as f64).exp();
                    // One-pole lowpass darkens the tail relative to the shot.
                    lp = 0.7 * lp + 0.3 * rng.random_range(-1.0..1.0);
                    samples[tail_start + i] += 0.5 * decay * lp;
                }
                start += period;
            }
            for s in &mut samples {
                *s = s.clamp(-1.0, 1.0);
            }
            samples
        }
    };
    Ok(Waveform {
        samples,
        sample_rate_hz: sr,
    })
}

fn fade_env(i: usize, n: usize, attack: usize, release: usize) -> f64 {
    let ramp = |x: f64| 0.5 - 0.5 * (std::f64::consts::PI * x.clamp(0.0, 1.0)).cos();
    let head = if attack == 0 {
        1.0
    } else {
        ramp(i as f64 / attack as f64)
    };
    let tail = if release == 0 {
        1.0
    } else {
        ramp((n - 1 - i) as f64 / release as f64)
    };
    head.min(tail)
}

/// The 20-item synthetic corpus used for default comparisons: impulse
/// trains, tones, chirps, modulated noise, and two-event clips, 10.24 s
/// each at 16 kHz.
pub fn default_corpus(seed: u64) -> Vec<(String, SynthSpec)> {
    let mut items = Vec::new();
    let base = |kind| SynthSpec {
        kind,
        duration_s: 10.24,
        sample_rate_hz: 16000,
        seed: 0,
    };
    for (i, rate) in [1.0, 2.0, 3.0, 5.0].into_iter().enumerate() {
        items.push((
            format!("impulse{i}"),
            base(SynthKind::ImpulseTrain { rate_hz: rate }),
        ));
    }
    for (i, freq) in [220.0, 440.0, 880.0, 1760.0].into_iter().enumerate() {
        items.push((format!("tone{i}"), base(SynthKind::Tone { freq_hz: freq })));
    }
    for (i, (f0, f1)) in [
        (200.0, 2000.0),
        (2000.0, 200.0),
        (100.0, 900.0),
        (500.0, 4000.0),
    ]
    .into_iter()
    .enumerate()
    {
        items.push((
            format!("chirp{i}"),
            base(SynthKind::Chirp {
                f0_hz: f0,
                f1_hz: f1,
            }),
        ));
    }
    for (i, rate) in [0.5, 1.0, 2.0, 4.0].into_iter().enumerate() {
        items.push((
            format!("amnoise{i}"),
            base(SynthKind::AmNoise { mod_rate_hz: rate }),
        ));
    }
    for (i, rate) in [0.4, 0.6, 0.8, 1.0].into_iter().enumerate() {
        items.push((
            format!("twoevent{i}"),
            base(SynthKind::TwoEvent { rate_hz: rate }),
        ));
    }
    for (i, (_, spec)) in items.iter_mut().enumerate() {
        spec.seed = seed.wrapping_add(i as u64);
    }
    items.sort_by(|a, b| a.0.cmp(&b.0));
    items
}

// --- WAV I/O -------------------------------------------------------------

/// Reads a RIFF/WAVE file: PCM 16-bit or IEEE float 32-bit, mono or stereo
/// (stereo is downmixed by averaging).
pub fn read_wav(path: &Path) -> Result<Waveform, CorpusError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    parse_wav(&bytes)
}

pub fn parse_wav(bytes: &[u8]) -> Result<Waveform, CorpusError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(CorpusError::NotAWavFile("missing RIFF/WAVE header".into()));
    }
    let mut pos = 12usize;
    let mut fmt: Option<(u16, u16, u32, u16)> = None; // format, channels, rate, bits
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_end = (pos + 8 + size).min(bytes.len());
        let body = &bytes[pos + 8..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(CorpusError::NotAWavFile("truncated fmt chunk".into()));
                }
                let format = u16::from_le_bytes(body[0..2].try_into().unwrap());
                let channels = u16::from_le_bytes(body[2..4].try_into().unwrap());
                let rate = u32::from_le_bytes(body[4..8].try_into().unwrap());
                let bits = u16::from_le_bytes(body[14..16].try_into().unwrap());
                fmt = Some((format, channels, rate, bits));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // Chunks are word-aligned.
        pos = pos + 8 + size + (size & 1);
    }
    let (format, channels, rate, bits) =
        fmt.ok_or_else(|| CorpusError::NotAWavFile("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| CorpusError::NotAWavFile("no data chunk".into()))?;
    if channels == 0 || rate == 0 {
        return Err(CorpusError::NotAWavFile("bad fmt fields".into()));
    }
    let ch = channels as usize;
    let interleaved: Vec<f64> = match (format, bits) {
        (1, 16) => data
            .chunks_exact(2)
            .map(|b| i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0)
            .collect(),
        (3, 32) => data
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
            .collect(),
        _ => {
            return Err(CorpusError::UnsupportedEncoding(format!(
                "format {format}, {bits}-bit"
            )))
        }
    };
    let frames = interleaved.len() / ch;
    if frames == 0 {
        return Err(CorpusError::NotAWavFile("empty data chunk".into()));
    }
    let samples: Vec<f64> = (0..frames)
        .map(|i| interleaved[i * ch..(i + 1) * ch].iter().sum::<f64>() / ch as f64)
        .collect();
    Ok(Waveform {
        samples,
        sample_rate_hz: rate,
    })
}

/// Writes 16-bit PCM mono, clamping samples to `[-1, 1]`.
pub fn write_wav(w: &Waveform, path: &Path) -> Result<(), CorpusError> {
    let bytes = encode_wav(w);
    std::fs::File::create(path)?.write_all(&bytes)?;
    Ok(())
}

pub fn encode_wav(w: &Waveform) -> Vec<u8> {
    let data_len = (w.samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&w.sample_rate_hz.to_le_bytes());
    out.extend_from_slice(&(w.sample_rate_hz * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in &w.samples {
        // Same 1/32768 scale as the reader, saturating at i16::MAX.
        let v = (s.clamp(-1.0, 1.0) * 32768.0)
            .round()
            .clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Linear-interpolation resampler. Downsampling first applies a windowed-
/// sinc lowpass at 0.45 of the target rate to suppress aliasing; quality is
/// adequate for test corpora only.
pub fn resample(w: &Waveform, target_rate_hz: u32) -> Result<Waveform, CorpusError> {
    w.validate()
        .map_err(|e| CorpusError::UnsupportedEncoding(e.to_string()))?;
    if target_rate_hz == 0 {
        return Err(CorpusError::InvalidFrequency {
            freq: 0.0,
            sample_rate: target_rate_hz,
        });
    }
    if target_rate_hz == w.sample_rate_hz {
        return Ok(w.clone());
    }
    let source = if target_rate_hz < w.sample_rate_hz {
        let cutoff = 0.45 * target_rate_hz as f64 / w.sample_rate_hz as f64;
        lowpass(&w.samples, cutoff)
    } else {
        w.samples.clone()
    };
    let ratio = w.sample_rate_hz as f64 / target_rate_hz as f64;
    let out_len = (w.samples.len() as f64 / ratio).floor() as usize;
    let samples: Vec<f64> = (0..out_len)
        .map(|i| {
            let pos = i as f64 * ratio;
            let i0 = pos.floor() as usize;
            let frac = pos - i0 as f64;
            let a = source[i0.min(source.len() - 1)];
            let b = source[(i0 + 1).min(source.len() - 1)];
            a + frac * (b - a)
        })
        .collect();
    Ok(Waveform {
        samples,
        sample_rate_hz: target_rate_hz,
    })
}

/// 63-tap Hann-windowed sinc lowpass; `cutoff` is in cycles per input
/// sample (0..0.5).
fn lowpass(x: &[f64], cutoff: f64) -> Vec<f64> {
    let taps = 63usize;
    let half = (taps / 2) as isize;
    let mut kernel: Vec<f64> = (0..taps)
        .map(|i| {
            let n = i as isize - half;
            let sinc = if n == 0 {
                2.0 * cutoff
            } else {
                (2.0 * std::f64::consts::PI * cutoff * n as f64).sin()
                    / (std::f64::consts::PI * n as f64)
            };
            let hann =
                0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (taps - 1) as f64).cos();
            sinc * hann
        })
        .collect();
    let gain: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= gain;
    }
    (0..x.len())
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .map(|(j, &k)| {
                    let idx = i as isize + j as isize - half;
                    if idx < 0 || idx >= x.len() as isize {
                        0.0
                    } else {
                        k * x[idx as usize]
                    }
                })
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: SynthKind) -> SynthSpec {
        SynthSpec {
            kind,
            duration_s: 10.0,
            sample_rate_hz: 16000,
            seed: 123,
        }
    }

    #[test]
    fn impulse_train_has_ten_clicks_at_integer_seconds() {
        let w = synthesize(&spec(SynthKind::ImpulseTrain { rate_hz: 1.0 })).unwrap();
        let nonzero: Vec<usize> = w
            .samples
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(nonzero.len(), 10);
        for (k, idx) in nonzero.iter().enumerate() {
            assert_eq!(*idx, k * 16000);
        }
    }

    #[test]
    fn tone_zero_crossings_match_frequency() {
        let w = synthesize(&spec(SynthKind::Tone { freq_hz: 440.0 })).unwrap();
        let crossings = w
            .samples
            .windows(2)
            .filter(|p| (p[0] >= 0.0) != (p[1] >= 0.0))
            .count();
        let per_second = crossings as f64 / w.duration_s();
        assert!(
            (per_second - 880.0).abs() / 880.0 < 0.01,
            "{per_second} crossings/s"
        );
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let s = spec(SynthKind::AmNoise { mod_rate_hz: 2.0 });
        let a = synthesize(&s).unwrap();
        let b = synthesize(&s).unwrap();
        assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn tone_above_nyquist_is_rejected() {
        let err = synthesize(&spec(SynthKind::Tone { freq_hz: 9000.0 })).unwrap_err();
        assert!(matches!(err, CorpusError::InvalidFrequency { .. }));
    }

    #[test]
    fn two_event_stays_in_range() {
        let w = synthesize(&spec(SynthKind::TwoEvent { rate_hz: 0.5 })).unwrap();
        assert!(w.samples.iter().all(|v| v.abs() <= 1.0));
        assert!(w.samples.iter().any(|v| v.abs() > 0.05));
    }

    #[test]
    fn default_corpus_has_twenty_sorted_items() {
        let corpus = default_corpus(7);
        assert_eq!(corpus.len(), 20);
        for pair in corpus.windows(2) {
            assert!(pair[0].0 < pair[1].0);
        }
    }

    #[test]
    fn wav_roundtrip_is_within_one_lsb() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let samples: Vec<f64> = (0..4096).map(|_| rng.random_range(-0.999..0.999)).collect();
        let w = Waveform::new(samples, 16000).unwrap();
        let bytes = encode_wav(&w);
        let back = parse_wav(&bytes).unwrap();
        assert_eq!(back.sample_rate_hz, 16000);
        assert_eq!(back.samples.len(), w.samples.len());
        for (a, b) in w.samples.iter().zip(&back.samples) {
            assert!((a - b).abs() <= 1.0 / 32768.0 + 1e-9);
        }
    }

    #[test]
    fn empty_file_is_a_header_error() {
        let err = parse_wav(&[]).unwrap_err();
        assert!(matches!(err, CorpusError::NotAWavFile(_)));
        assert!(err.to_string().contains("not a WAV file"));
    }

    #[test]
    fn unsupported_codec_is_reported() {
        // 8-bit PCM header.
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"RIFF");
        bytes.extend_from_slice(&36u32.to_le_bytes());
        bytes.extend_from_slice(b"WAVE");
        bytes.extend_from_slice(b"fmt ");
        bytes.extend_from_slice(&16u32.to_le_bytes());
        bytes.extend_from_slice(&1u16.to_le_bytes());
        bytes.extend_from_slice(&1u16.to_le_bytes());
        bytes.extend_from_slice(&16000u32.to_le_bytes());
        bytes.extend_from_slice(&16000u32.to_le_bytes());
        bytes.extend_from_slice(&1u16.to_le_bytes());
        bytes.extend_from_slice(&8u16.to_le_bytes());
        bytes.extend_from_slice(b"data");
        bytes.extend_from_slice(&4u32.to_le_bytes());
        bytes.extend_from_slice(&[0, 0, 0, 0]);
        let err = parse_wav(&bytes).unwrap_err();
        assert!(matches!(err, CorpusError::UnsupportedEncoding(_)));
    }

    #[test]
    fn stereo_is_downmixed_by_mean() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"RIFF");
        bytes.extend_from_slice(&44u32.to_le_bytes());
        bytes.extend_from_slice(b"WAVE");
        bytes.extend_from_slice(b"fmt ");
        bytes.extend_from_slice(&16u32.to_le_bytes());
        bytes.extend_from_slice(&1u16.to_le_bytes());
        bytes.extend_from_slice(&2u16.to_le_bytes()); // stereo
        bytes.extend_from_slice(&16000u32.to_le_bytes());
        bytes.extend_from_slice(&64000u32.to_le_bytes());
        bytes.extend_from_slice(&4u16.to_le_bytes());
        bytes.extend_from_slice(&16u16.to_le_bytes());
        bytes.extend_from_slice(b"data");
        bytes.extend_from_slice(&8u32.to_le_bytes());
        for v in [8192i16, 16384, -8192, -16384] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let w = parse_wav(&bytes).unwrap();
        assert_eq!(w.samples.len(), 2);
        assert!((w.samples[0] - 12288.0 / 32768.0).abs() < 1e-9);
        assert!((w.samples[1] + 12288.0 / 32768.0).abs() < 1e-9);
    }

    #[test]
    fn wav_parser_never_panics_on_garbage() {
        let mut runner = proptest::test_runner::TestRunner::default();
        runner
            .run(
                &proptest::collection::vec(proptest::num::u8::ANY, 0..512),
                |bytes| {
                    let _ = parse_wav(&bytes);
                    Ok(())
                },
            )
            .unwrap();
        // Valid header prefixes with arbitrary tails.
        let mut runner = proptest::test_runner::TestRunner::default();
        runner
            .run(
                &proptest::collection::vec(proptest::num::u8::ANY, 0..256),
                |tail| {
                    let mut bytes = b"RIFF\x00\x01\x00\x00WAVE".to_vec();
                    bytes.extend_from_slice(&tail);
                    let _ = parse_wav(&bytes);
                    Ok(())
                },
            )
            .unwrap();
    }

    #[test]
    fn resample_preserves_tone_frequency() {
        // 1 kHz tone at 44.1 kHz, resampled to 16 kHz; FFT-peak oracle.
        let sr_in = 44100u32;
        let n = sr_in as usize;
        let samples: Vec<f64> = (0..n)
            .map(|i| 0.5 * (2.0 * std::f64::consts::PI * 1000.0 * i as f64 / sr_in as f64).sin())
            .collect();
        let w = Waveform::new(samples, sr_in).unwrap();
        let out = resample(&w, 16000).unwrap();
        assert_eq!(out.sample_rate_hz, 16000);

        use rustfft::{num_complex::Complex, FftPlanner};
        let m = out.samples.len();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        let mut buf: Vec<Complex<f64>> =
            out.samples.iter().map(|&s| Complex::new(s, 0.0)).collect();
        fft.process(&mut buf);
        let peak = buf[..m / 2]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
            .unwrap()
            .0;
        let peak_hz = peak as f64 * 16000.0 / m as f64;
        assert!((peak_hz - 1000.0).abs() < 5.0, "peak at {peak_hz} Hz");
    }
}
