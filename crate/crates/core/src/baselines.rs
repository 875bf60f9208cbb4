//! Competing control-signal extractors.
//!
//! Each extractor turns a mel map into a `K x T` conditioning map of the
//! same shape: a binary onset mask, a frequency-broadcast energy track, or
//! a block-pooled low-resolution mel. Together with the recomposed
//! quantized-decomposition map they form the comparison set for the
//! completeness-vs-complexity harness.

use crate::dsp::MelSpectrogram;
use crate::mat::Mat;
use crate::metrics::{self, MetricsError};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("invalid pooling factors: {kf} x {kt} for a {k} x {t} map")]
    InvalidPoolingFactors {
        k: usize,
        t: usize,
        kf: usize,
        kt: usize,
    },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Which generator produced a control map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    MelQcd,
    Onset,
    Energy,
    LowresMel,
}

impl SignalKind {
    pub fn name(&self) -> &'static str {
        match self {
            SignalKind::MelQcd => "qcd",
            SignalKind::Onset => "onset",
            SignalKind::Energy => "energy",
            SignalKind::LowresMel => "lowres",
        }
    }
}

/// A `K x T` conditioning map plus its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSignal {
    pub kind: SignalKind,
    pub map: Mat,
    /// Generator parameters, human readable.
    pub meta: String,
}

/// Onset detection and mask parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnsetParams {
    pub threshold_rel: f64,
    pub min_gap_s: f64,
    /// Mask width after each onset, in frames.
    pub window_frames: usize,
}

impl Default for OnsetParams {
    fn default() -> Self {
        Self {
            threshold_rel: 0.3,
            min_gap_s: 0.05,
            window_frames: 10,
        }
    }
}

/// Binary mask that is 1 for `window_frames` frames after each detected
/// onset and 0 elsewhere.
pub fn onset_signal(
    m: &MelSpectrogram,
    params: &OnsetParams,
) -> Result<ControlSignal, BaselineError> {
    let odf = metrics::odf(m)?;
    let onsets = metrics::pick_onsets(&odf, params.threshold_rel, params.min_gap_s)?;
    let frames = m.frames();
    let mut map = Mat::zeros(m.num_bins, frames);
    for &time in &onsets.times_s {
        let start = (time * m.frame_rate_hz).round() as usize;
        for t in start..(start + params.window_frames).min(frames) {
            for k in 0..m.num_bins {
                map.set(k, t, 1.0);
            }
        }
    }
    Ok(ControlSignal {
        kind: SignalKind::Onset,
        map,
        meta: format!(
            "threshold_rel={} min_gap_s={} window_frames={}",
            params.threshold_rel, params.min_gap_s, params.window_frames
        ),
    })
}

/// Per-frame mel mean broadcast over all frequency rows.
pub fn energy_signal(m: &MelSpectrogram) -> ControlSignal {
    let k = m.num_bins;
    let means: Vec<f64> = (0..m.frames())
        .map(|t| m.values.col(t).iter().sum::<f64>() / k as f64)
        .collect();
    ControlSignal {
        kind: SignalKind::Energy,
        map: Mat::from_fn(k, m.frames(), |_, c| means[c]),
        meta: "frequency-broadcast column mean".into(),
    }
}

/// Mean-pools the mel to `(K/kf) x (T/kt)` blocks, then nearest-neighbor
/// upsamples back to full shape.
pub fn lowres_mel_signal(
    m: &MelSpectrogram,
    kf: usize,
    kt: usize,
) -> Result<ControlSignal, BaselineError> {
    let (k, t) = (m.num_bins, m.frames());
    if kf == 0 || kt == 0 || k % kf != 0 || t % kt != 0 {
        return Err(BaselineError::InvalidPoolingFactors { k, t, kf, kt });
    }
    let (kb, tb) = (k / kf, t / kt);
    let mut pooled = Mat::zeros(kb, tb);
    for bt in 0..tb {
        for bk in 0..kb {
            let mut sum = 0.0;
            for dt in 0..kt {
                for dk in 0..kf {
                    sum += m.values.get(bk * kf + dk, bt * kt + dt);
                }
            }
            pooled.set(bk, bt, sum / (kf * kt) as f64);
        }
    }
    Ok(ControlSignal {
        kind: SignalKind::LowresMel,
        map: Mat::from_fn(k, t, |r, c| pooled.get(r / kf, c / kt)),
        meta: format!("kf={kf} kt={kt}"),
    })
}
