//! Synchronization and fidelity metrics.
//!
//! The onset detection function is half-wave-rectified spectral flux over
//! the mel map. Onset lists come from relative-threshold peak picking, and
//! two ODFs compare as probability distributions over frames via the 1-D
//! Wasserstein distance and the Jensen-Shannon divergence (natural log).
//! Reconstruction error and bit accounting quantify the completeness side
//! of the trade-off.

use crate::codebook::{codebook_bits, SvqParams};
use crate::dsp::MelSpectrogram;
use crate::mat::Mat;
use crate::qcd::DownsampleSpec;
use thiserror::Error;

/// SNR report ceiling for exact reconstructions.
pub const SNR_CAP_DB: f64 = 300.0;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("too short: need at least {needed} frames, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("degenerate distribution")]
    DegenerateDistribution,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid threshold: {0}")]
    InvalidThreshold(f64),
}

/// Onset detection function: non-negative novelty per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Odf {
    pub values: Vec<f64>,
    pub frame_rate_hz: f64,
}

/// Strictly increasing onset times in seconds.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OnsetList {
    pub times_s: Vec<f64>,
}

impl OnsetList {
    pub fn new(times_s: Vec<f64>) -> Self {
        debug_assert!(times_s.windows(2).all(|w| w[0] < w[1]));
        Self { times_s }
    }

    pub fn len(&self) -> usize {
        self.times_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times_s.is_empty()
    }
}

/// Spectral-flux ODF of a mel map: `sum_k max(0, M[k][t] - M[k][t-1])`,
/// with the first frame pinned to zero.
pub fn odf(m: &MelSpectrogram) -> Result<Odf, MetricsError> {
    odf_matrix(&m.values, m.frame_rate_hz)
}

pub fn odf_matrix(values: &Mat, frame_rate_hz: f64) -> Result<Odf, MetricsError> {
    let frames = values.cols();
    if frames < 2 {
        return Err(MetricsError::TooShort {
            needed: 2,
            got: frames,
        });
    }
    let mut out = vec![0.0; frames];
    for (t, slot) in out.iter_mut().enumerate().skip(1) {
        let prev = values.col(t - 1);
        let cur = values.col(t);
        *slot = cur.iter().zip(prev).map(|(c, p)| (c - p).max(0.0)).sum();
    }
    Ok(Odf {
        values: out,
        frame_rate_hz,
    })
}

/// Picks local maxima above `threshold_rel * max(odf)`, keeping at least
/// `min_gap_s` between accepted onsets (earlier peaks win).
pub fn pick_onsets(o: &Odf, threshold_rel: f64, min_gap_s: f64) -> Result<OnsetList, MetricsError> {
    if !(threshold_rel > 0.0 && threshold_rel < 1.0) {
        return Err(MetricsError::InvalidThreshold(threshold_rel));
    }
    let max = o.values.iter().fold(0.0f64, |a, &b| a.max(b));
    if max <= 0.0 {
        return Ok(OnsetList::default());
    }
    let threshold = threshold_rel * max;
    let n = o.values.len();
    let mut times = Vec::new();
    let mut last_accepted = f64::NEG_INFINITY;
    for t in 0..n {
        let v = o.values[t];
        if v < threshold {
            continue;
        }
        let left_ok = t == 0 || o.values[t - 1] <= v;
        let right_ok = t + 1 == n || o.values[t + 1] < v;
        if !(left_ok && right_ok) {
            continue;
        }
        let time = t as f64 / o.frame_rate_hz;
        if time - last_accepted >= min_gap_s {
            times.push(time);
            last_accepted = time;
        }
    }
    Ok(OnsetList::new(times))
}

/// Fraction of reference onsets matched one-to-one by a prediction within
/// `tol_s`. Greedy in time order; two empty lists count as a perfect 1.
pub fn onset_acc(pred: &OnsetList, reference: &OnsetList, tol_s: f64) -> f64 {
    if reference.is_empty() {
        // Hit rate over an empty reference is vacuously perfect.
        return 1.0;
    }
    let mut hits = 0usize;
    let mut pi = 0usize;
    for &r in &reference.times_s {
        while pi < pred.times_s.len() && pred.times_s[pi] < r - tol_s {
            pi += 1;
        }
        if pi < pred.times_s.len() && (pred.times_s[pi] - r).abs() <= tol_s {
            hits += 1;
            pi += 1;
        }
    }
    hits as f64 / reference.len() as f64
}

fn normalize(o: &Odf) -> Result<Vec<f64>, MetricsError> {
    let mass: f64 = o.values.iter().sum();
    if !mass.is_finite() || mass <= 0.0 {
        return Err(MetricsError::DegenerateDistribution);
    }
    Ok(o.values.iter().map(|v| v / mass).collect())
}

fn check_compatible(p: &Odf, q: &Odf) -> Result<(), MetricsError> {
    if p.values.len() != q.values.len() {
        return Err(MetricsError::ShapeMismatch(format!(
            "{} vs {} frames",
            p.values.len(),
            q.values.len()
        )));
    }
    if p.frame_rate_hz != q.frame_rate_hz {
        return Err(MetricsError::ShapeMismatch(format!(
            "frame rates {} vs {}",
            p.frame_rate_hz, q.frame_rate_hz
        )));
    }
    Ok(())
}

/// Wasserstein-1 distance in seconds between two mass-normalized ODFs:
/// the integral of `|CDF_p - CDF_q|` over time.
pub fn w_distance(p: &Odf, q: &Odf) -> Result<f64, MetricsError> {
    check_compatible(p, q)?;
    let pn = normalize(p)?;
    let qn = normalize(q)?;
    let dt = 1.0 / p.frame_rate_hz;
    let mut cp = 0.0;
    let mut cq = 0.0;
    let mut dist = 0.0;
    for (a, b) in pn.iter().zip(&qn) {
        cp += a;
        cq += b;
        dist += (cp - cq).abs() * dt;
    }
    Ok(dist)
}

/// Jensen-Shannon divergence (natural log) of the frame-normalized ODFs;
/// lies in `[0, ln 2]`.
pub fn js_divergence(p: &Odf, q: &Odf) -> Result<f64, MetricsError> {
    check_compatible(p, q)?;
    let pn = normalize(p)?;
    let qn = normalize(q)?;
    let kl_half = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| {
                if x > 0.0 {
                    x * (x / (0.5 * (x + y))).ln()
                } else {
                    0.0
                }
            })
            .sum()
    };
    Ok((0.5 * kl_half(&pn, &qn) + 0.5 * kl_half(&qn, &pn)).max(0.0))
}

/// Mean squared error and SNR (dB, capped) of an estimated map against a
/// reference.
pub fn reconstruction_error(est: &Mat, reference: &Mat) -> Result<(f64, f64), MetricsError> {
    if est.rows() != reference.rows() || est.cols() != reference.cols() {
        return Err(MetricsError::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            est.rows(),
            est.cols(),
            reference.rows(),
            reference.cols()
        )));
    }
    let mut err_sum = 0.0;
    let mut ref_sum = 0.0;
    for (e, r) in est.data().iter().zip(reference.data()) {
        err_sum += (r - e) * (r - e);
        ref_sum += r * r;
    }
    let n = (est.rows() * est.cols()) as f64;
    let mse = err_sum / n;
    let snr = if err_sum == 0.0 {
        SNR_CAP_DB
    } else {
        (10.0 * (ref_sum / err_sum).log10()).min(SNR_CAP_DB)
    };
    Ok((mse, snr))
}

/// Theoretical and storage bit rates of a code stream configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityReport {
    /// `K' * log2(2*lambda + 1)` plus two 32-bit continuous scalars.
    pub theoretical_bits_per_frame: f64,
    /// Bits per stored frame in the container layout.
    pub storage_bits_per_frame: u32,
    /// Stored code frames per second after temporal reduction.
    pub code_frames_per_second: f64,
    /// Storage bits per second.
    pub bits_per_second: f64,
    /// log2 of the codebook length.
    pub codebook_log2: f64,
}

/// Bit accounting for a downsample/quantization configuration at a given
/// mel frame rate.
pub fn complexity_report(
    spec: &DownsampleSpec,
    p: &SvqParams,
    frame_rate_hz: f64,
) -> ComplexityReport {
    let codebook_log2 = codebook_bits(p);
    let theoretical = codebook_log2 + 2.0 * 32.0;
    let bytes_per_part = crate::container::bytes_per_part(p);
    let storage = (p.factor_split as u32) * 8 * bytes_per_part as u32 + 32 + 32;
    let code_fps = frame_rate_hz / spec.effective_temporal_factor() as f64;
    ComplexityReport {
        theoretical_bits_per_frame: theoretical,
        storage_bits_per_frame: storage,
        code_frames_per_second: code_fps,
        bits_per_second: storage as f64 * code_fps,
        codebook_log2,
    }
}

/// One comparison-harness result row.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffRow {
    pub signal: String,
    pub item: String,
    pub mse: f64,
    pub snr_db: f64,
    pub bits_per_second: f64,
    pub codebook_bits: f64,
    pub onset_acc: f64,
    pub w_dis: Option<f64>,
    pub js_div: Option<f64>,
}

/// Completeness-vs-complexity report, one row per (signal, item) plus
/// per-signal mean rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TradeoffReport {
    pub rows: Vec<TradeoffRow>,
}

impl TradeoffReport {
    pub const CSV_HEADER: &'static str =
        "signal,item,mse,snr_db,bits_per_second,codebook_bits,onset_acc,w_dis,js_div";

    pub fn sort(&mut self) {
        self.rows
            .sort_by(|a, b| (&a.signal, &a.item).cmp(&(&b.signal, &b.item)));
    }

    /// Appends one mean row per signal kind (item = "mean"). Missing
    /// synchronization values are skipped; the mean stays missing only if
    /// every item was missing.
    pub fn append_means(&mut self) {
        let mut signals: Vec<String> = self.rows.iter().map(|r| r.signal.clone()).collect();
        signals.sort();
        signals.dedup();
        let mut means = Vec::new();
        for signal in signals {
            let rows: Vec<&TradeoffRow> = self.rows.iter().filter(|r| r.signal == signal).collect();
            let n = rows.len() as f64;
            let mean_opt = |vals: Vec<f64>| -> Option<f64> {
                if vals.is_empty() {
                    None
                } else {
                    Some(vals.iter().sum::<f64>() / vals.len() as f64)
                }
            };
            means.push(TradeoffRow {
                signal: signal.clone(),
                item: "mean".into(),
                mse: rows.iter().map(|r| r.mse).sum::<f64>() / n,
                snr_db: rows.iter().map(|r| r.snr_db).sum::<f64>() / n,
                bits_per_second: rows.iter().map(|r| r.bits_per_second).sum::<f64>() / n,
                codebook_bits: rows.iter().map(|r| r.codebook_bits).sum::<f64>() / n,
                onset_acc: rows.iter().map(|r| r.onset_acc).sum::<f64>() / n,
                w_dis: mean_opt(rows.iter().filter_map(|r| r.w_dis).collect()),
                js_div: mean_opt(rows.iter().filter_map(|r| r.js_div).collect()),
            });
        }
        self.rows.extend(means);
        self.sort();
    }

    /// Fixed-column CSV; missing synchronization values are empty cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let opt = |v: Option<f64>| v.map(|x| format!("{x:.9}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{:.9},{:.4},{:.3},{:.4},{:.4},{},{}\n",
                r.signal,
                r.item,
                r.mse,
                r.snr_db,
                r.bits_per_second,
                r.codebook_bits,
                r.onset_acc,
                opt(r.w_dis),
                opt(r.js_div),
            ));
        }
        out
    }

    pub fn mean_row(&self, signal: &str) -> Option<&TradeoffRow> {
        self.rows
            .iter()
            .find(|r| r.signal == signal && r.item == "mean")
    }
}
