//! Waveform-to-mel transforms and approximate inversion.
//!
//! Analysis runs a Hann-windowed STFT over centered frames, applies a
//! triangular mel filterbank (HTK scale) to the power spectrum, and
//! compresses with a natural log over an additive floor. Framing reflects
//! `n_fft - hop` samples across the two edges so that a clip of `n`
//! samples yields exactly `n / hop` frames; at the 16 kHz defaults
//! (`n_fft` 1024, hop 160, 256 mel bins over 0-8 kHz) a 10.24 s clip maps
//! to a 256 x 1024 mel matrix at 100 frames/s.
//!
//! Inversion goes mel -> linear power (non-negative least squares against
//! the filterbank) -> waveform (Griffin-Lim with zero initial phase). It
//! is meant for audibility checks, not fidelity.

use crate::mat::Mat;
use rustfft::{num_complex::Complex, Fft, FftPlanner};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DspError {
    #[error("input too short: need more than {needed} samples, got {got}")]
    InputTooShort { needed: usize, got: usize },
    #[error("invalid mel range: f_min {f_min} Hz, f_max {f_max} Hz, nyquist {nyquist} Hz")]
    InvalidMelRange {
        f_min: f64,
        f_max: f64,
        nyquist: f64,
    },
    #[error("invalid stft config: {0}")]
    InvalidStft(String),
    #[error("invalid waveform: {0}")]
    InvalidWaveform(String),
    #[error("at least one iteration required")]
    ZeroIterations,
}

/// Tapering window applied to each analysis frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    Hann,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StftConfig {
    /// Frame length in samples; must be a power of two.
    pub n_fft: usize,
    /// Hop between frame starts in samples.
    pub hop: usize,
    pub window: WindowKind,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            n_fft: 1024,
            hop: 160,
            window: WindowKind::Hann,
        }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<(), DspError> {
        if self.n_fft == 0 || !self.n_fft.is_power_of_two() {
            return Err(DspError::InvalidStft(format!(
                "n_fft must be a power of two, got {}",
                self.n_fft
            )));
        }
        if self.hop == 0 || self.hop > self.n_fft {
            return Err(DspError::InvalidStft(format!(
                "hop must satisfy 0 < hop <= n_fft, got hop {} n_fft {}",
                self.hop, self.n_fft
            )));
        }
        Ok(())
    }

    pub fn num_freq_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    /// Reflected samples added before the first frame; the remainder of
    /// `n_fft - hop` goes after the last one.
    pub fn pad_front(&self) -> usize {
        (self.n_fft - self.hop) / 2
    }

    pub fn pad_back(&self) -> usize {
        self.n_fft - self.hop - self.pad_front()
    }

    /// Number of frames produced for `num_samples` input samples: one
    /// frame per hop of input.
    pub fn num_frames(&self, num_samples: usize) -> usize {
        num_samples / self.hop
    }
}

/// Mono audio carrier. Samples are nominally in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self, DspError> {
        let w = Self {
            samples,
            sample_rate_hz,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), DspError> {
        if self.samples.is_empty() {
            return Err(DspError::InvalidWaveform("no samples".into()));
        }
        if !self.samples.iter().all(|v| v.is_finite()) {
            return Err(DspError::InvalidWaveform("non-finite sample".into()));
        }
        if self.sample_rate_hz == 0 {
            return Err(DspError::InvalidWaveform("zero sample rate".into()));
        }
        Ok(())
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MelConfig {
    /// Number of mel bins (K).
    pub num_bins: usize,
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    /// Additive floor inside the log compression.
    pub log_floor: f64,
    pub stft: StftConfig,
}

impl Default for MelConfig {
    fn default() -> Self {
        Self {
            num_bins: 256,
            f_min_hz: 0.0,
            f_max_hz: 8000.0,
            log_floor: 1e-5,
            stft: StftConfig::default(),
        }
    }
}

impl MelConfig {
    pub fn validate(&self, sample_rate_hz: u32) -> Result<(), DspError> {
        self.stft.validate()?;
        let nyquist = sample_rate_hz as f64 / 2.0;
        if !(self.f_min_hz >= 0.0 && self.f_min_hz < self.f_max_hz && self.f_max_hz <= nyquist) {
            return Err(DspError::InvalidMelRange {
                f_min: self.f_min_hz,
                f_max: self.f_max_hz,
                nyquist,
            });
        }
        if self.num_bins == 0 {
            return Err(DspError::InvalidStft("num_bins must be positive".into()));
        }
        if !self.log_floor.is_finite() || self.log_floor <= 0.0 {
            return Err(DspError::InvalidStft("log_floor must be positive".into()));
        }
        Ok(())
    }

    /// Same analysis with a different number of mel bins.
    pub fn with_bins(&self, num_bins: usize) -> Self {
        Self {
            num_bins,
            ..self.clone()
        }
    }
}

/// Log-mel magnitude map, `num_bins x frames`.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    pub values: Mat,
    pub num_bins: usize,
    pub frame_rate_hz: f64,
    pub params: MelConfig,
}

impl MelSpectrogram {
    pub fn frames(&self) -> usize {
        self.values.cols()
    }

    /// Sample rate of the analyzed waveform, recovered from the frame rate.
    pub fn sample_rate_hz(&self) -> u32 {
        (self.frame_rate_hz * self.params.stft.hop as f64).round() as u32
    }
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

fn hann(n: usize) -> Vec<f64> {
    // Periodic form, standard for overlap-add analysis.
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

fn reflect_pad(samples: &[f64], front: usize, back: usize) -> Vec<f64> {
    debug_assert!(front < samples.len() && back < samples.len());
    let n = samples.len();
    let mut out = Vec::with_capacity(n + front + back);
    for i in 0..front {
        out.push(samples[front - i]);
    }
    out.extend_from_slice(samples);
    for i in 0..back {
        out.push(samples[n - 2 - i]);
    }
    out
}

/// Short-time Fourier transform with centered frames.
///
/// Returns one complex column of `n_fft / 2 + 1` bins per frame; column `t`
/// is the windowed DFT of the padded-signal frame starting at `t * hop`.
pub fn stft(w: &Waveform, cfg: &StftConfig) -> Result<Vec<Vec<Complex<f64>>>, DspError> {
    cfg.validate()?;
    w.validate()?;
    if w.samples.len() <= cfg.n_fft {
        return Err(DspError::InputTooShort {
            needed: cfg.n_fft,
            got: w.samples.len(),
        });
    }
    let padded = reflect_pad(&w.samples, cfg.pad_front(), cfg.pad_back());
    let window = hann(cfg.n_fft);
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(cfg.n_fft);
    Ok(stft_padded(&padded, &window, cfg, fft.as_ref()))
}

fn stft_padded(
    padded: &[f64],
    window: &[f64],
    cfg: &StftConfig,
    fft: &dyn Fft<f64>,
) -> Vec<Vec<Complex<f64>>> {
    let frames = (padded.len() - cfg.n_fft) / cfg.hop + 1;
    let bins = cfg.num_freq_bins();
    let mut out = Vec::with_capacity(frames);
    let mut buf = vec![Complex::new(0.0, 0.0); cfg.n_fft];
    for t in 0..frames {
        let start = t * cfg.hop;
        for n in 0..cfg.n_fft {
            buf[n] = Complex::new(padded[start + n] * window[n], 0.0);
        }
        fft.process(&mut buf);
        out.push(buf[..bins].to_vec());
    }
    out
}

/// Triangular mel filterbank over the one-sided FFT bins.
///
/// Band edges sit at `num_bins + 2` points uniformly spaced on the HTK mel
/// scale between `f_min` and `f_max`; each row ramps linearly up to its
/// center point and back down, peaking at 1. Rows keep only their
/// contiguous support, which also serves the sparse transpose products
/// needed by the least-squares inversion.
#[derive(Debug, Clone)]
pub struct FilterBank {
    num_bins: usize,
    num_freqs: usize,
    rows: Vec<FilterRow>,
    centers_hz: Vec<f64>,
}

#[derive(Debug, Clone)]
struct FilterRow {
    start: usize,
    weights: Vec<f64>,
}

impl FilterBank {
    pub fn new(cfg: &MelConfig, sample_rate_hz: u32) -> Result<Self, DspError> {
        cfg.validate(sample_rate_hz)?;
        let num_freqs = cfg.stft.num_freq_bins();
        let k = cfg.num_bins;
        let mel_lo = hz_to_mel(cfg.f_min_hz);
        let mel_hi = hz_to_mel(cfg.f_max_hz);
        let points: Vec<f64> = (0..k + 2)
            .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (k + 1) as f64))
            .collect();
        let bin_hz = sample_rate_hz as f64 / cfg.stft.n_fft as f64;

        let mut rows = Vec::with_capacity(k);
        for i in 0..k {
            let (lower, center, upper) = (points[i], points[i + 1], points[i + 2]);
            let mut start = 0;
            let mut weights = Vec::new();
            for j in 0..num_freqs {
                let f = j as f64 * bin_hz;
                let up = (f - lower) / (center - lower);
                let down = (upper - f) / (upper - center);
                let w = up.min(down).max(0.0);
                if w > 0.0 {
                    if weights.is_empty() {
                        start = j;
                    }
                    weights.push(w);
                } else if !weights.is_empty() {
                    break;
                }
            }
            rows.push(FilterRow { start, weights });
        }
        Ok(Self {
            num_bins: k,
            num_freqs,
            rows,
            centers_hz: points[1..=k].to_vec(),
        })
    }

    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    pub fn num_freqs(&self) -> usize {
        self.num_freqs
    }

    /// Center frequency of each mel band in Hz.
    pub fn centers_hz(&self) -> &[f64] {
        &self.centers_hz
    }

    /// `F p`: mel-band energies of a power spectrum column.
    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        debug_assert_eq!(power.len(), self.num_freqs);
        self.rows
            .iter()
            .map(|row| {
                row.weights
                    .iter()
                    .zip(&power[row.start..row.start + row.weights.len()])
                    .map(|(w, p)| w * p)
                    .sum()
            })
            .collect()
    }

    /// `F^T v`: spread mel-band values back over FFT bins.
    pub fn apply_transpose(&self, mel: &[f64]) -> Vec<f64> {
        debug_assert_eq!(mel.len(), self.num_bins);
        let mut out = vec![0.0; self.num_freqs];
        for (row, &v) in self.rows.iter().zip(mel) {
            for (j, w) in row.weights.iter().enumerate() {
                out[row.start + j] += w * v;
            }
        }
        out
    }

    /// Sum of filter weights per FFT bin (the partition profile).
    pub fn bin_coverage(&self) -> Vec<f64> {
        self.apply_transpose(&vec![1.0; self.num_bins])
    }
}

/// Log-mel analysis: `ln(F |STFT|^2 + floor)`.
pub fn mel_spectrogram(w: &Waveform, cfg: &MelConfig) -> Result<MelSpectrogram, DspError> {
    let fb = FilterBank::new(cfg, w.sample_rate_hz)?;
    let frames = stft(w, &cfg.stft)?;
    let mut values = Mat::zeros(cfg.num_bins, frames.len());
    let mut power = vec![0.0; cfg.stft.num_freq_bins()];
    for (t, frame) in frames.iter().enumerate() {
        for (p, c) in power.iter_mut().zip(frame) {
            *p = c.norm_sqr();
        }
        let mel = fb.apply(&power);
        let col = values.col_mut(t);
        for (dst, m) in col.iter_mut().zip(&mel) {
            *dst = (m + cfg.log_floor).ln();
        }
    }
    Ok(MelSpectrogram {
        values,
        num_bins: cfg.num_bins,
        frame_rate_hz: w.sample_rate_hz as f64 / cfg.stft.hop as f64,
        params: cfg.clone(),
    })
}

/// Inverse STFT by windowed overlap-add, normalized by the summed squared
/// window. Strips the framing pad, returning exactly `frames * hop` samples.
fn istft(cols: &[Vec<Complex<f64>>], cfg: &StftConfig, ifft: &dyn Fft<f64>) -> Vec<f64> {
    let frames = cols.len();
    let n = cfg.n_fft;
    let padded_len = (frames - 1) * cfg.hop + n;
    let window = hann(n);
    let mut acc = vec![0.0; padded_len];
    let mut norm = vec![0.0; padded_len];
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    for (t, col) in cols.iter().enumerate() {
        buf[..col.len()].copy_from_slice(col);
        for j in 1..n / 2 {
            buf[n - j] = col[j].conj();
        }
        ifft.process(&mut buf);
        let start = t * cfg.hop;
        for i in 0..n {
            let x = buf[i].re / n as f64;
            acc[start + i] += window[i] * x;
            norm[start + i] += window[i] * window[i];
        }
    }
    let pad = cfg.pad_front();
    (pad..pad + frames * cfg.hop)
        .map(|i| acc[i] / norm[i].max(1e-12))
        .collect()
}

/// Fixed-iteration non-negative least squares `min ||F p - b||, p >= 0`
/// via accelerated projected gradient. One solver per filterbank; columns
/// are independent.
struct NnlsSolver<'a> {
    fb: &'a FilterBank,
    lipschitz: f64,
    iterations: usize,
}

impl<'a> NnlsSolver<'a> {
    fn new(fb: &'a FilterBank) -> Self {
        // Largest eigenvalue of F^T F by power iteration.
        let mut v = vec![1.0; fb.num_freqs()];
        let mut lambda = 1.0;
        for _ in 0..30 {
            let fv = fb.apply(&v);
            let gv = fb.apply_transpose(&fv);
            let norm = gv.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            lambda = norm;
            for (dst, g) in v.iter_mut().zip(&gv) {
                *dst = g / norm;
            }
        }
        Self {
            fb,
            lipschitz: lambda.max(1e-12),
            iterations: 120,
        }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let step = 1.0 / self.lipschitz;
        let mut p = self.fb.apply_transpose(b);
        let mut y = p.clone();
        let mut t = 1.0f64;
        for _ in 0..self.iterations {
            let residual: Vec<f64> = self
                .fb
                .apply(&y)
                .iter()
                .zip(b)
                .map(|(fy, b)| fy - b)
                .collect();
            let grad = self.fb.apply_transpose(&residual);
            let next: Vec<f64> = y
                .iter()
                .zip(&grad)
                .map(|(yi, g)| (yi - step * g).max(0.0))
                .collect();
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            for i in 0..y.len() {
                y[i] = next[i] + beta * (next[i] - p[i]);
            }
            p = next;
            t = t_next;
        }
        p
    }
}

/// Recovers a waveform whose re-analyzed mel approximates `m`.
pub fn griffin_lim(m: &MelSpectrogram, iterations: u32) -> Result<Waveform, DspError> {
    griffin_lim_trace(m, iterations).map(|(w, _)| w)
}

/// Griffin-Lim with a per-iteration record of the mel-domain residual.
///
/// `trace[k]` is the RMS difference between `m` and the re-analyzed mel of
/// the estimate held after iteration `k`. Zero initial phase keeps the
/// procedure deterministic, and the update stops early once the residual
/// stops improving (plain alternating projection can limit-cycle around
/// the fixed point); stalled iterations repeat the converged residual.
/// The returned waveform is the measured-best iterate, so its residual is
/// exactly the last trace entry.
pub fn griffin_lim_trace(
    m: &MelSpectrogram,
    iterations: u32,
) -> Result<(Waveform, Vec<f64>), DspError> {
    if iterations == 0 {
        return Err(DspError::ZeroIterations);
    }
    let cfg = &m.params;
    let sample_rate = m.sample_rate_hz();
    let fb = FilterBank::new(cfg, sample_rate)?;
    let stft_cfg = &cfg.stft;
    let frames = m.frames();
    if frames == 0 {
        return Err(DspError::InputTooShort { needed: 1, got: 0 });
    }

    // Mel (log power) -> linear power spectrogram, one NNLS per column.
    let solver = NnlsSolver::new(&fb);
    let mut target_mag: Vec<Vec<f64>> = Vec::with_capacity(frames);
    for t in 0..frames {
        let mel_power: Vec<f64> = m
            .values
            .col(t)
            .iter()
            .map(|v| (v.exp() - cfg.log_floor).max(0.0))
            .collect();
        let power = solver.solve(&mel_power);
        target_mag.push(power.iter().map(|p| p.max(0.0).sqrt()).collect());
    }

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(stft_cfg.n_fft);
    let ifft = planner.plan_fft_inverse(stft_cfg.n_fft);
    let window = hann(stft_cfg.n_fft);

    // Zero initial phase.
    let mut spec: Vec<Vec<Complex<f64>>> = target_mag
        .iter()
        .map(|col| col.iter().map(|&mag| Complex::new(mag, 0.0)).collect())
        .collect();

    let mut trace = Vec::with_capacity(iterations as usize);
    let mut best_residual = f64::INFINITY;
    let mut best_signal = Vec::new();
    for _ in 0..iterations {
        let signal = istft(&spec, stft_cfg, ifft.as_ref());
        let reanalyzed = stft_of_signal(&signal, stft_cfg, &window, fft.as_ref());
        let residual = mel_residual_rms(&reanalyzed, &fb, m);
        if residual > best_residual {
            // Converged to a limit cycle; freeze the estimate.
            trace.push(best_residual);
            continue;
        }
        best_residual = residual;
        best_signal = signal;
        trace.push(residual);
        for (dst, (src, mag)) in spec.iter_mut().zip(reanalyzed.iter().zip(&target_mag)) {
            for (d, (s, &g)) in dst.iter_mut().zip(src.iter().zip(mag)) {
                let norm = s.norm();
                *d = if norm > 0.0 {
                    s * (g / norm)
                } else {
                    Complex::new(g, 0.0)
                };
            }
        }
    }
    let mut signal = best_signal;

    // Keep the output inside the nominal amplitude range.
    let peak = signal.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if peak > 1.0 {
        for s in &mut signal {
            *s /= peak;
        }
    }
    Ok((Waveform::new(signal, sample_rate)?, trace))
}

fn stft_of_signal(
    signal: &[f64],
    cfg: &StftConfig,
    window: &[f64],
    fft: &dyn Fft<f64>,
) -> Vec<Vec<Complex<f64>>> {
    let padded = reflect_pad(signal, cfg.pad_front(), cfg.pad_back());
    stft_padded(&padded, window, cfg, fft)
}

fn mel_residual_rms(spec: &[Vec<Complex<f64>>], fb: &FilterBank, target: &MelSpectrogram) -> f64 {
    let floor = target.params.log_floor;
    let mut sum = 0.0;
    let mut count = 0usize;
    for (t, col) in spec.iter().enumerate() {
        let power: Vec<f64> = col.iter().map(|c| c.norm_sqr()).collect();
        let mel = fb.apply(&power);
        for (k, m) in mel.iter().enumerate() {
            let d = (m + floor).ln() - target.values.get(k, t);
            sum += d * d;
            count += 1;
        }
    }
    (sum / count as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, duration_s: f64, sample_rate: u32, amp: f64) -> Waveform {
        let n = (duration_s * sample_rate as f64).round() as usize;
        let samples = (0..n)
            .map(|i| amp * (2.0 * PI * freq * i as f64 / sample_rate as f64).sin())
            .collect();
        Waveform::new(samples, sample_rate).unwrap()
    }

    /// Cosine tone whose length makes it even-symmetric at both edges, so
    /// the reflect padding continues it exactly and every frame is a pure
    /// windowed sinusoid.
    fn symmetric_tone(freq: f64, num_samples: usize, sample_rate: u32, amp: f64) -> Waveform {
        let period_check = 2.0 * freq * (num_samples - 1) as f64 / sample_rate as f64;
        assert!(
            (period_check - period_check.round()).abs() < 1e-9,
            "tone not symmetric at the right edge"
        );
        let samples = (0..num_samples)
            .map(|i| amp * (2.0 * PI * freq * i as f64 / sample_rate as f64).cos())
            .collect();
        Waveform::new(samples, sample_rate).unwrap()
    }

    #[test]
    fn stft_of_zero_waveform_is_zero() {
        let w = Waveform::new(vec![0.0; 4000], 16000).unwrap();
        let cfg = StftConfig::default();
        let cols = stft(&w, &cfg).unwrap();
        assert_eq!(cols.len(), cfg.num_frames(4000));
        for col in &cols {
            assert!(col.iter().all(|c| c.norm() == 0.0));
        }
    }

    #[test]
    fn stft_peaks_at_bin_center_frequency() {
        // f = k * f_wav / n_fft lands exactly on FFT bin k.
        let cfg = StftConfig::default();
        let bin = 40usize;
        let freq = bin as f64 * 16000.0 / cfg.n_fft as f64;
        let w = symmetric_tone(freq, 8001, 16000, 0.5);
        let cols = stft(&w, &cfg).unwrap();
        for col in &cols {
            let argmax = col
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
                .unwrap()
                .0;
            assert_eq!(argmax, bin);
        }
    }

    #[test]
    fn stft_framewise_parseval_matches_direct_sum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let samples: Vec<f64> = (0..8000).map(|_| rng.random_range(-0.5..0.5)).collect();
        let w = Waveform::new(samples.clone(), 16000).unwrap();
        let cfg = StftConfig::default();
        let cols = stft(&w, &cfg).unwrap();

        // Independent framing: same padding rule, direct time-domain sums.
        let (front, back) = (cfg.pad_front(), cfg.pad_back());
        let mut padded = Vec::new();
        for i in 0..front {
            padded.push(samples[front - i]);
        }
        padded.extend_from_slice(&samples);
        for i in 0..back {
            padded.push(samples[samples.len() - 2 - i]);
        }
        let window: Vec<f64> = (0..cfg.n_fft)
            .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / cfg.n_fft as f64).cos())
            .collect();

        for (t, col) in cols.iter().enumerate() {
            let mut spectral = col[0].norm_sqr() + col[cfg.n_fft / 2].norm_sqr();
            for c in &col[1..cfg.n_fft / 2] {
                spectral += 2.0 * c.norm_sqr();
            }
            let mut direct = 0.0;
            for n in 0..cfg.n_fft {
                let x = padded[t * cfg.hop + n] * window[n];
                direct += x * x;
            }
            let expected = cfg.n_fft as f64 * direct;
            assert!(
                (spectral - expected).abs() <= 1e-6 * expected.abs().max(1e-30),
                "frame {t}: {spectral} vs {expected}"
            );
        }
    }

    #[test]
    fn stft_rejects_short_input() {
        let w = Waveform::new(vec![0.1; 512], 16000).unwrap();
        let err = stft(&w, &StftConfig::default()).unwrap_err();
        assert!(matches!(err, DspError::InputTooShort { .. }));
        assert!(err.to_string().contains("input too short"));
    }

    #[test]
    fn stft_magnitude_is_linear_in_amplitude() {
        let w1 = sine(440.0, 0.25, 16000, 0.25);
        let w2 = Waveform::new(w1.samples.iter().map(|s| 2.0 * s).collect(), 16000).unwrap();
        let cfg = StftConfig::default();
        let a = stft(&w1, &cfg).unwrap();
        let b = stft(&w2, &cfg).unwrap();
        for (ca, cb) in a.iter().zip(&b) {
            for (x, y) in ca.iter().zip(cb) {
                let lhs = y.norm();
                let rhs = 2.0 * x.norm();
                assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1e-12));
            }
        }
    }

    #[test]
    fn mel_of_silence_is_log_floor() {
        let w = Waveform::new(vec![0.0; 16000], 16000).unwrap();
        let cfg = MelConfig::default();
        let m = mel_spectrogram(&w, &cfg).unwrap();
        let expected = cfg.log_floor.ln();
        assert!(m.values.iter().all(|v| v == expected));
    }

    #[test]
    fn default_config_maps_ten_seconds_to_1024_frames() {
        let n = (10.24 * 16000.0) as usize;
        let w = Waveform::new(vec![0.01; n], 16000).unwrap();
        let m = mel_spectrogram(&w, &MelConfig::default()).unwrap();
        assert_eq!(m.num_bins, 256);
        assert_eq!(m.frames(), 1024);
        assert_eq!(m.frame_rate_hz, 100.0);
    }

    #[test]
    fn mel_rejects_range_beyond_nyquist() {
        let w = sine(440.0, 0.5, 16000, 0.5);
        let cfg = MelConfig {
            f_max_hz: 9000.0,
            ..MelConfig::default()
        };
        let err = mel_spectrogram(&w, &cfg).unwrap_err();
        assert!(matches!(err, DspError::InvalidMelRange { .. }));
    }

    #[test]
    fn tone_argmax_is_mel_bin_nearest_440() {
        let w = symmetric_tone(440.0, 8001, 16000, 0.5);
        let cfg = MelConfig::default();
        let m = mel_spectrogram(&w, &cfg).unwrap();

        // Independent center computation straight from the scale formulas.
        let mel_lo = 2595.0 * (1.0f64 + cfg.f_min_hz / 700.0).log10();
        let mel_hi = 2595.0 * (1.0f64 + cfg.f_max_hz / 700.0).log10();
        let centers: Vec<f64> = (1..=cfg.num_bins)
            .map(|i| {
                let mel = mel_lo + (mel_hi - mel_lo) * i as f64 / (cfg.num_bins + 1) as f64;
                700.0 * (10f64.powf(mel / 2595.0) - 1.0)
            })
            .collect();
        let nearest = centers
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - 440.0)
                    .abs()
                    .partial_cmp(&(b.1 - 440.0).abs())
                    .unwrap()
            })
            .unwrap()
            .0;

        for t in 0..m.frames() {
            let col = m.values.col(t);
            let argmax = col
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert_eq!(argmax, nearest, "frame {t}");
        }
    }

    #[test]
    fn filterbank_covers_interior_bins() {
        let cfg = MelConfig::default();
        let fb = FilterBank::new(&cfg, 16000).unwrap();
        let coverage = fb.bin_coverage();
        let bin_hz = 16000.0 / cfg.stft.n_fft as f64;
        for (j, &c) in coverage.iter().enumerate() {
            let f = j as f64 * bin_hz;
            if f > cfg.f_min_hz && f < cfg.f_max_hz {
                assert!(c > 0.0, "bin {j} at {f} Hz uncovered");
            }
        }
    }

    #[test]
    fn filterbank_centers_increase() {
        let fb = FilterBank::new(&MelConfig::default(), 16000).unwrap();
        for pair in fb.centers_hz().windows(2) {
            assert!(pair[0] < pair[1]);
        }
    }

    #[test]
    fn odd_hop_frames_and_energy_behave() {
        // hop that does not split the pad evenly still frames correctly.
        let cfg = StftConfig {
            n_fft: 512,
            hop: 129,
            window: WindowKind::Hann,
        };
        let w = sine(500.0, 0.5, 16000, 0.5);
        let cols = stft(&w, &cfg).unwrap();
        assert_eq!(cols.len(), cfg.num_frames(w.samples.len()));
        assert_eq!(cols.len(), w.samples.len() / cfg.hop);
        assert!(cols
            .iter()
            .all(|col| col.iter().all(|c| c.norm().is_finite())));
    }

    #[test]
    fn griffin_lim_rejects_empty_mel() {
        let m = MelSpectrogram {
            values: Mat::zeros(256, 0),
            num_bins: 256,
            frame_rate_hz: 100.0,
            params: MelConfig::default(),
        };
        assert!(matches!(
            griffin_lim(&m, 4),
            Err(DspError::InputTooShort { .. })
        ));
    }

    #[test]
    fn mel_is_deterministic() {
        let w = sine(523.25, 0.3, 16000, 0.4);
        let cfg = MelConfig::default();
        let a = mel_spectrogram(&w, &cfg).unwrap();
        let b = mel_spectrogram(&w, &cfg).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn mel_respects_log_floor() {
        let w = sine(440.0, 0.3, 16000, 0.5);
        let cfg = MelConfig::default();
        let m = mel_spectrogram(&w, &cfg).unwrap();
        let floor = cfg.log_floor.ln();
        assert!(m.values.iter().all(|v| v >= floor));
    }

    #[test]
    fn griffin_lim_requires_iterations() {
        let w = sine(440.0, 0.3, 16000, 0.5);
        let m = mel_spectrogram(&w, &MelConfig::default()).unwrap();
        let err = griffin_lim(&m, 0).unwrap_err();
        assert_eq!(err, DspError::ZeroIterations);
        assert_eq!(err.to_string(), "at least one iteration required");
    }

    #[test]
    fn griffin_lim_of_silence_is_quiet() {
        let w = Waveform::new(vec![0.0; 16000], 16000).unwrap();
        let m = mel_spectrogram(&w, &MelConfig::default()).unwrap();
        let out = griffin_lim(&m, 4).unwrap();
        let rms =
            (out.samples.iter().map(|s| s * s).sum::<f64>() / out.samples.len() as f64).sqrt();
        assert!(rms < 1e-4, "rms {rms}");
    }

    #[test]
    fn griffin_lim_recovers_tone_frequency() {
        let w = sine(440.0, 1.0, 16000, 0.5);
        let m = mel_spectrogram(&w, &MelConfig::default()).unwrap();
        let out = griffin_lim(&m, 32).unwrap();

        // FFT-peak oracle on the reconstruction.
        let n = out.samples.len();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let mut buf: Vec<Complex<f64>> =
            out.samples.iter().map(|&s| Complex::new(s, 0.0)).collect();
        fft.process(&mut buf);
        let peak = buf[..n / 2]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
            .unwrap()
            .0;
        let peak_hz = peak as f64 * 16000.0 / n as f64;
        let bin_hz = 16000.0 / 1024.0;
        assert!(
            (peak_hz - 440.0).abs() <= bin_hz,
            "dominant frequency {peak_hz}"
        );
    }

    #[test]
    fn griffin_lim_residual_non_increasing_on_chirp() {
        let sr = 16000u32;
        let n = sr as usize;
        let samples: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / sr as f64;
                // 200 -> 2000 Hz linear sweep.
                let phase = 2.0 * PI * (200.0 * t + 0.5 * 1800.0 * t * t);
                0.5 * phase.sin()
            })
            .collect();
        let w = Waveform::new(samples, sr).unwrap();
        let m = mel_spectrogram(&w, &MelConfig::default()).unwrap();
        let (_, trace) = griffin_lim_trace(&m, 32).unwrap();
        assert_eq!(trace.len(), 32);
        for k in 1..trace.len() {
            assert!(
                trace[k] <= trace[k - 1] + 1e-12,
                "iteration {k}: {} > {}",
                trace[k],
                trace[k - 1]
            );
        }
    }
}
