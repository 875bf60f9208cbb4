//! Quantization-continuum decomposition of mel maps.
//!
//! Every mel column splits exactly into three parts,
//!
//! ```text
//! M[k][t] = E[t] + S[k][t] * D[t]
//! ```
//!
//! where `E[t]` is the column mean (loudness), `D[t]` the population
//! standard deviation across frequency (spread), and `S[.][t]` the
//! zero-mean unit-std shape that identifies the sound event. The shape is
//! the expensive part to carry, so it is frequency-downsampled and rounded
//! to integers in `[-lambda, lambda]` while the two scalar tracks stay
//! continuous; recomposition applies the identity again after upsampling.

use crate::dsp::MelSpectrogram;
use crate::mat::Mat;
use thiserror::Error;

/// Columns with population std at or below this are treated as constant
/// and carry a zero shape.
pub const STD_EPSILON: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum QcdError {
    #[error("inconsistent decomposition: {0}")]
    InconsistentDecomposition(String),
    #[error("lambda must be positive")]
    LambdaZero,
    #[error("invalid frequency factor: {bins_out} does not divide {bins_in}")]
    InvalidFrequencyFactor { bins_in: usize, bins_out: usize },
    #[error("invalid temporal factor: {factor} does not divide {frames}")]
    InvalidTemporalFactor { frames: usize, factor: usize },
    #[error("invalid smoothing parameters: window {window}, polyorder {polyorder}")]
    InvalidSmoothingParameters { window: usize, polyorder: usize },
    #[error("inconsistent stream: {0}")]
    InconsistentStream(String),
    #[error("frequency strategy requires re-analysis from audio")]
    NeedsReanalysis,
}

/// Per-frame energy/std tracks plus the continuous shape matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QcdDecomposition {
    /// Shape matrix, `K x T`; each non-degenerate column has zero mean and
    /// unit population std.
    pub semantic: Mat,
    /// Column means, length `T`.
    pub energy: Vec<f64>,
    /// Column population standard deviations, length `T` (0 for
    /// degenerate columns).
    pub std: Vec<f64>,
}

/// Quantized shape columns with entries in `[-lambda, lambda]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedSemantic {
    /// `K' x T'` integer matrix, column-major.
    pub codes: Vec<i32>,
    pub num_bins: usize,
    pub frames: usize,
    pub lambda: u32,
}

impl QuantizedSemantic {
    pub fn col(&self, t: usize) -> &[i32] {
        &self.codes[t * self.num_bins..(t + 1) * self.num_bins]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemporalStrategy {
    /// Strided pick of every `factor`-th frame; recovered by repetition.
    RepeatDownsample,
    /// Keep the full frame rate.
    Original,
    /// Savitzky-Golay smoothing, then strided pick.
    SavgolSmooth,
    /// Mean over contiguous blocks of `factor` frames.
    MeanPool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyStrategy {
    /// Mean-pool bin groups; recover by repeating each value over its group.
    DsRepeat,
    /// Mean-pool bin groups; recover by placing each value at the group
    /// center bin, zeros elsewhere.
    DsSparse,
    /// Re-analyze the audio with a `K'`-bin filterbank; recover by repetition.
    Mel8Repeat,
    /// Re-analyze the audio with a `K'`-bin filterbank; recover sparsely.
    Mel8Sparse,
}

impl FrequencyStrategy {
    /// True for the strategies realized by pooling the full-resolution
    /// shape; the `mel8` pair instead re-analyzes the waveform with a
    /// small filterbank.
    pub fn pools_full_resolution(&self) -> bool {
        matches!(self, Self::DsRepeat | Self::DsSparse)
    }

    pub fn recovers_sparse(&self) -> bool {
        matches!(self, Self::DsSparse | Self::Mel8Sparse)
    }
}

/// How the shape matrix and the continuous tracks are reduced before
/// quantization and recovered afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct DownsampleSpec {
    pub temporal_strategy: TemporalStrategy,
    pub temporal_factor: usize,
    pub freq_strategy: FrequencyStrategy,
    /// Number of frequency bins after reduction (K').
    pub freq_out: usize,
    pub savgol_window: usize,
    pub savgol_polyorder: usize,
}

impl Default for DownsampleSpec {
    fn default() -> Self {
        Self {
            temporal_strategy: TemporalStrategy::RepeatDownsample,
            temporal_factor: 4,
            freq_strategy: FrequencyStrategy::DsRepeat,
            freq_out: 8,
            savgol_window: 9,
            savgol_polyorder: 3,
        }
    }
}

impl DownsampleSpec {
    /// Factor actually applied on the time axis (1 when keeping the
    /// original rate).
    pub fn effective_temporal_factor(&self) -> usize {
        match self.temporal_strategy {
            TemporalStrategy::Original => 1,
            _ => self.temporal_factor,
        }
    }

    pub fn validate(&self, num_bins: usize, frames: usize) -> Result<(), QcdError> {
        if self.freq_out == 0 || !num_bins.is_multiple_of(self.freq_out) {
            return Err(QcdError::InvalidFrequencyFactor {
                bins_in: num_bins,
                bins_out: self.freq_out,
            });
        }
        let factor = self.effective_temporal_factor();
        if factor == 0 || !frames.is_multiple_of(factor) {
            return Err(QcdError::InvalidTemporalFactor {
                frames,
                factor: self.temporal_factor,
            });
        }
        if self.temporal_strategy == TemporalStrategy::SavgolSmooth {
            validate_savgol(self.savgol_window, self.savgol_polyorder)?;
        }
        Ok(())
    }
}

fn validate_savgol(window: usize, polyorder: usize) -> Result<(), QcdError> {
    if window.is_multiple_of(2) || window <= polyorder {
        return Err(QcdError::InvalidSmoothingParameters { window, polyorder });
    }
    Ok(())
}

/// Splits a mel map into energy, std, and normalized shape.
///
/// Total on finite input: constant columns come back with zero std and an
/// all-zero shape column, so the recomposition identity still holds.
pub fn decompose(m: &MelSpectrogram) -> QcdDecomposition {
    decompose_matrix(&m.values)
}

pub fn decompose_matrix(values: &Mat) -> QcdDecomposition {
    let (k, t_frames) = (values.rows(), values.cols());
    let mut semantic = Mat::zeros(k, t_frames);
    let mut energy = Vec::with_capacity(t_frames);
    let mut std = Vec::with_capacity(t_frames);
    for t in 0..t_frames {
        let col = values.col(t);
        let mean = col.iter().sum::<f64>() / k as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / k as f64;
        let sd = var.sqrt();
        energy.push(mean);
        if sd > STD_EPSILON {
            std.push(sd);
            let dst = semantic.col_mut(t);
            for (d, v) in dst.iter_mut().zip(col) {
                *d = (v - mean) / sd;
            }
        } else {
            std.push(0.0);
        }
    }
    QcdDecomposition {
        semantic,
        energy,
        std,
    }
}

/// Applies `E + S * D` column-wise; the exact inverse of [`decompose`].
pub fn recompose_exact(d: &QcdDecomposition) -> Result<Mat, QcdError> {
    let t_frames = d.semantic.cols();
    if d.energy.len() != t_frames || d.std.len() != t_frames {
        return Err(QcdError::InconsistentDecomposition(format!(
            "semantic has {} columns, energy {}, std {}",
            t_frames,
            d.energy.len(),
            d.std.len()
        )));
    }
    let mut out = Mat::zeros(d.semantic.rows(), t_frames);
    for t in 0..t_frames {
        let (e, sd) = (d.energy[t], d.std[t]);
        let src = d.semantic.col(t);
        let dst = out.col_mut(t);
        for (o, s) in dst.iter_mut().zip(src) {
            *o = e + s * sd;
        }
    }
    Ok(out)
}

/// Rounds and clamps a single shape value to an integer in
/// `[-lambda, lambda]`. Ties round away from zero.
pub fn quantize_value(s: f64, lambda: u32) -> i32 {
    let bound = lambda as f64;
    if s < -bound {
        -(lambda as i32)
    } else if s > bound {
        lambda as i32
    } else {
        s.round() as i32
    }
}

/// Quantizes a shape matrix column-by-column.
pub fn quantize_semantic(s: &Mat, lambda: u32) -> Result<QuantizedSemantic, QcdError> {
    if lambda == 0 {
        return Err(QcdError::LambdaZero);
    }
    let codes = s
        .data()
        .iter()
        .map(|&v| quantize_value(v, lambda))
        .collect();
    Ok(QuantizedSemantic {
        codes,
        num_bins: s.rows(),
        frames: s.cols(),
        lambda,
    })
}

/// Mean-pools contiguous groups of `K / K'` bins down to `K'` rows.
///
/// Only the pooled strategy pair runs through here; the `mel8` pair is
/// realized by re-analyzing the waveform with a `K'`-bin filterbank and
/// decomposing that, so requesting it from an already-analyzed matrix is
/// an error.
pub fn downsample_frequency(s: &Mat, spec: &DownsampleSpec) -> Result<Mat, QcdError> {
    if !spec.freq_strategy.pools_full_resolution() {
        return Err(QcdError::NeedsReanalysis);
    }
    pool_frequency(s, spec.freq_out)
}

pub fn pool_frequency(s: &Mat, bins_out: usize) -> Result<Mat, QcdError> {
    let k = s.rows();
    if bins_out == 0 || !k.is_multiple_of(bins_out) {
        return Err(QcdError::InvalidFrequencyFactor {
            bins_in: k,
            bins_out,
        });
    }
    let group = k / bins_out;
    let mut out = Mat::zeros(bins_out, s.cols());
    for t in 0..s.cols() {
        let col = s.col(t);
        let dst = out.col_mut(t);
        for g in 0..bins_out {
            dst[g] = col[g * group..(g + 1) * group].iter().sum::<f64>() / group as f64;
        }
    }
    Ok(out)
}

/// Expands a `K' x T` matrix back to `K x T` rows.
///
/// Repeat mode copies each row over its whole group; sparse mode places
/// the value at the group center bin (`group_start + group_size / 2`) and
/// zeros elsewhere.
pub fn upsample_frequency(
    s: &Mat,
    spec: &DownsampleSpec,
    bins_out: usize,
) -> Result<Mat, QcdError> {
    let kp = s.rows();
    if kp == 0 || !bins_out.is_multiple_of(kp) {
        return Err(QcdError::InvalidFrequencyFactor {
            bins_in: bins_out,
            bins_out: kp,
        });
    }
    let group = bins_out / kp;
    let sparse = spec.freq_strategy.recovers_sparse();
    let mut out = Mat::zeros(bins_out, s.cols());
    for t in 0..s.cols() {
        let src = s.col(t);
        let dst = out.col_mut(t);
        for g in 0..kp {
            if sparse {
                dst[g * group + group / 2] = src[g];
            } else {
                for d in dst[g * group..(g + 1) * group].iter_mut() {
                    *d = src[g];
                }
            }
        }
    }
    Ok(out)
}

/// Reduces a continuous track to `T / factor` frames using the configured
/// strategy (matrices go through [`downsample_temporal_matrix`] row-wise).
pub fn downsample_temporal(x: &[f64], spec: &DownsampleSpec) -> Result<Vec<f64>, QcdError> {
    let factor = spec.effective_temporal_factor();
    if factor == 0 || !x.len().is_multiple_of(factor) {
        return Err(QcdError::InvalidTemporalFactor {
            frames: x.len(),
            factor: spec.temporal_factor,
        });
    }
    match spec.temporal_strategy {
        TemporalStrategy::Original => Ok(x.to_vec()),
        TemporalStrategy::RepeatDownsample => Ok(strided_pick(x, factor)),
        TemporalStrategy::MeanPool => Ok(x
            .chunks(factor)
            .map(|c| c.iter().sum::<f64>() / factor as f64)
            .collect()),
        TemporalStrategy::SavgolSmooth => {
            let smoothed = savgol_filter(x, spec.savgol_window, spec.savgol_polyorder)?;
            Ok(strided_pick(&smoothed, factor))
        }
    }
}

/// Strategy-respecting reduction of every row of a `K x T` matrix.
pub fn downsample_temporal_matrix(s: &Mat, spec: &DownsampleSpec) -> Result<Mat, QcdError> {
    let factor = spec.effective_temporal_factor();
    if factor == 0 || !s.cols().is_multiple_of(factor) {
        return Err(QcdError::InvalidTemporalFactor {
            frames: s.cols(),
            factor: spec.temporal_factor,
        });
    }
    let rows = s.rows();
    let mut row_buf = vec![0.0; s.cols()];
    let mut reduced_rows: Vec<Vec<f64>> = Vec::with_capacity(rows);
    for r in 0..rows {
        for (t, slot) in row_buf.iter_mut().enumerate() {
            *slot = s.get(r, t);
        }
        reduced_rows.push(downsample_temporal(&row_buf, spec)?);
    }
    let cols_out = s.cols() / factor;
    Ok(Mat::from_fn(rows, cols_out, |r, c| reduced_rows[r][c]))
}

/// Integer label tracks are never averaged: reduction is always a strided
/// pick regardless of the configured strategy.
pub fn downsample_temporal_labels(x: &[i64], factor: usize) -> Result<Vec<i64>, QcdError> {
    if factor == 0 || !x.len().is_multiple_of(factor) {
        return Err(QcdError::InvalidTemporalFactor {
            frames: x.len(),
            factor,
        });
    }
    Ok(x.iter().step_by(factor).copied().collect())
}

fn strided_pick(x: &[f64], factor: usize) -> Vec<f64> {
    x.iter().step_by(factor).copied().collect()
}

/// Recovers the full frame rate by repeating each value `factor` times.
pub fn upsample_temporal(x: &[f64], factor: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len() * factor);
    for &v in x {
        for _ in 0..factor {
            out.push(v);
        }
    }
    out
}

fn upsample_temporal_matrix(s: &Mat, factor: usize) -> Mat {
    Mat::from_fn(s.rows(), s.cols() * factor, |r, c| s.get(r, c / factor))
}

/// Savitzky-Golay smoothing: least-squares polynomial fit of order
/// `polyorder` over a sliding window of odd length `window`. Edge samples
/// are evaluated from the polynomial fitted to the first/last full window,
/// so polynomials up to `polyorder` are reproduced exactly everywhere.
pub fn savgol_filter(x: &[f64], window: usize, polyorder: usize) -> Result<Vec<f64>, QcdError> {
    validate_savgol(window, polyorder)?;
    if x.len() < window {
        return Err(QcdError::InvalidSmoothingParameters { window, polyorder });
    }
    let half = window / 2;

    // Weight row for evaluating the window fit at centered offset `at`
    // (window positions run -half..=half, which keeps the Gram matrix
    // well conditioned).
    let eval_weights = |at: f64| -> Vec<f64> {
        let m = polyorder + 1;
        let pos = |p: usize| p as f64 - half as f64;
        // Gram matrix G = A^T A of the polynomial design matrix.
        let mut g = vec![vec![0.0; m]; m];
        for (i, row) in g.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..window).map(|p| pos(p).powi((i + j) as i32)).sum();
            }
        }
        let ginv = invert(&mut g);
        // w_p = sum_i at^i * (G^-1 A^T)[i][p]
        (0..window)
            .map(|p| {
                (0..m)
                    .map(|i| {
                        let gai: f64 = (0..m).map(|j| ginv[i][j] * pos(p).powi(j as i32)).sum();
                        at.powi(i as i32) * gai
                    })
                    .sum()
            })
            .collect()
    };

    let center = eval_weights(0.0);
    let mut out = vec![0.0; x.len()];
    for i in half..x.len() - half {
        out[i] = center
            .iter()
            .zip(&x[i - half..i - half + window])
            .map(|(w, v)| w * v)
            .sum();
    }
    for i in 0..half {
        let head = eval_weights(i as f64 - half as f64);
        out[i] = head.iter().zip(&x[..window]).map(|(w, v)| w * v).sum();
        let tail = eval_weights(half as f64 - i as f64);
        out[x.len() - 1 - i] = tail
            .iter()
            .zip(&x[x.len() - window..])
            .map(|(w, v)| w * v)
            .sum();
    }
    Ok(out)
}

/// Gauss-Jordan inverse of a small symmetric positive-definite system.
fn invert(g: &mut [Vec<f64>]) -> Vec<Vec<f64>> {
    let n = g.len();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&a, &b| g[a][col].abs().partial_cmp(&g[b][col].abs()).unwrap())
            .unwrap();
        g.swap(col, pivot_row);
        inv.swap(col, pivot_row);
        let pivot = g[col][col];
        for j in 0..n {
            g[col][j] /= pivot;
            inv[col][j] /= pivot;
        }
        for row in 0..n {
            if row != col {
                let f = g[row][col];
                for j in 0..n {
                    g[row][j] -= f * g[col][j];
                    inv[row][j] -= f * inv[col][j];
                }
            }
        }
    }
    inv
}

/// Recomposes a control map from quantized codes and reduced tracks.
///
/// Codes and tracks are upsampled to `K x T` per the spec, then combined
/// entry-wise as `E + S * D`.
pub fn recompose_qcd(
    q: &QuantizedSemantic,
    energy: &[f64],
    std: &[f64],
    spec: &DownsampleSpec,
    num_bins: usize,
    frames: usize,
) -> Result<Mat, QcdError> {
    let s_real = Mat::from_fn(q.num_bins, q.frames, |r, c| q.col(c)[r] as f64);
    recompose_control(&s_real, energy, std, spec, num_bins, frames)
}

/// Same recomposition from a real-valued (not necessarily quantized)
/// reduced shape matrix.
pub fn recompose_control(
    s_reduced: &Mat,
    energy: &[f64],
    std: &[f64],
    spec: &DownsampleSpec,
    num_bins: usize,
    frames: usize,
) -> Result<Mat, QcdError> {
    let factor = spec.effective_temporal_factor();
    let frames_reduced = s_reduced.cols();
    if frames_reduced * factor != frames {
        return Err(QcdError::InconsistentStream(format!(
            "{} code frames at factor {} cannot fill {} frames",
            frames_reduced, factor, frames
        )));
    }
    if energy.len() != frames_reduced || std.len() != frames_reduced {
        return Err(QcdError::InconsistentStream(format!(
            "tracks have {} / {} frames, codes {}",
            energy.len(),
            std.len(),
            frames_reduced
        )));
    }
    let s_time = upsample_temporal_matrix(s_reduced, factor);
    let s_full = upsample_frequency(&s_time, spec, num_bins)?;
    let e_full = upsample_temporal(energy, factor);
    let d_full = upsample_temporal(std, factor);
    let mut out = Mat::zeros(num_bins, frames);
    for t in 0..frames {
        let (e, d) = (e_full[t], d_full[t]);
        let src = s_full.col(t);
        let dst = out.col_mut(t);
        for (o, s) in dst.iter_mut().zip(src) {
            *o = e + s * d;
        }
    }
    Ok(out)
}
