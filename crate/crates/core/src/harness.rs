//! Corpus-wide completeness-vs-complexity comparison.
//!
//! For every corpus item the harness builds each requested control map,
//! measures reconstruction error against the true mel, compares onset
//! behavior through the ODF metrics, and attaches the bit cost of carrying
//! the signal. Rows are deterministic and sorted, whatever the degree of
//! parallelism.

use crate::baselines::{self, OnsetParams, SignalKind};
use crate::codebook::SvqParams;
use crate::container;
use crate::corpus;
use crate::dsp::{MelConfig, MelSpectrogram, Waveform};
use crate::mat::Mat;
use crate::metrics::{self, MetricsError, TradeoffReport, TradeoffRow};
use crate::qcd::{DownsampleSpec, FrequencyStrategy, TemporalStrategy};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error(transparent)]
    Dsp(#[from] crate::dsp::DspError),
    #[error(transparent)]
    Baseline(#[from] crate::baselines::BaselineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Container(#[from] container::ContainerError),
    #[error(transparent)]
    Corpus(#[from] corpus::CorpusError),
}

#[derive(Debug, Clone)]
pub struct HarnessOptions {
    pub mel: MelConfig,
    pub downsample: DownsampleSpec,
    pub svq: SvqParams,
    pub signals: Vec<SignalKind>,
    pub onset: OnsetParams,
    /// Onset accuracy matching tolerance in seconds.
    pub acc_tol_s: f64,
    /// Low-resolution mel pooling factors (frequency, time). The defaults
    /// put the low-res signal at 6400 bit/s against the 8000 bit/s of the
    /// full-rate code stream it is compared with.
    pub lowres_kf: usize,
    pub lowres_kt: usize,
    pub jobs: usize,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        // The comparison evaluates signal completeness, so the
        // quantized-decomposition row keeps the ground-truth energy/std
        // tracks at full frame rate; the factor-4 reduction is a codec
        // default, exercised separately by the temporal ablation.
        let downsample = DownsampleSpec {
            temporal_strategy: TemporalStrategy::Original,
            ..DownsampleSpec::default()
        };
        Self {
            mel: MelConfig::default(),
            downsample,
            svq: SvqParams::default(),
            signals: vec![
                SignalKind::MelQcd,
                SignalKind::Onset,
                SignalKind::Energy,
                SignalKind::LowresMel,
            ],
            onset: OnsetParams::default(),
            acc_tol_s: 0.05,
            lowres_kf: 32,
            lowres_kt: 4,
            jobs: 1,
        }
    }
}

/// Renders the built-in synthetic corpus to waveforms.
pub fn synthesize_default_corpus(seed: u64) -> Result<Vec<(String, Waveform)>, HarnessError> {
    corpus::default_corpus(seed)
        .into_iter()
        .map(|(id, spec)| Ok((id, corpus::synthesize(&spec)?)))
        .collect()
}

/// Evaluates every requested signal on every item, appending per-signal
/// mean rows. Items may be processed in parallel; output order is fixed.
pub fn evaluate_corpus(
    items: &[(String, Waveform)],
    opts: &HarnessOptions,
) -> Result<TradeoffReport, HarnessError> {
    let runner = |_id: &str, w: &Waveform| evaluate_item_signals(w, opts);
    run_over_corpus(items, opts.jobs, runner)
}

/// Temporal-strategy ablation: the quantized-decomposition signal under
/// each reduction strategy, labeled by strategy name.
pub fn ablate_temporal(
    items: &[(String, Waveform)],
    opts: &HarnessOptions,
) -> Result<TradeoffReport, HarnessError> {
    let strategies = [
        (TemporalStrategy::RepeatDownsample, "downsample"),
        (TemporalStrategy::Original, "original"),
        (TemporalStrategy::SavgolSmooth, "smooth"),
        (TemporalStrategy::MeanPool, "mean"),
    ];
    let runner = |_id: &str, w: &Waveform| {
        let mut rows = Vec::new();
        for (strategy, label) in strategies {
            let mut variant = opts.clone();
            variant.downsample.temporal_strategy = strategy;
            let ctx = ItemContext::analyze(w, &variant)?;
            rows.push(ctx.qcd_row(&variant, label)?);
        }
        Ok(rows)
    };
    run_over_corpus(items, opts.jobs, runner)
}

/// Frequency-strategy ablation across the pooled and re-analysis
/// reduction/recovery modes.
pub fn ablate_frequency(
    items: &[(String, Waveform)],
    opts: &HarnessOptions,
) -> Result<TradeoffReport, HarnessError> {
    let strategies = [
        (FrequencyStrategy::DsRepeat, "ds-repeat"),
        (FrequencyStrategy::DsSparse, "ds-sparse"),
        (FrequencyStrategy::Mel8Repeat, "mel8-repeat"),
        (FrequencyStrategy::Mel8Sparse, "mel8-sparse"),
    ];
    let runner = |_id: &str, w: &Waveform| {
        let mut rows = Vec::new();
        for (strategy, label) in strategies {
            let mut variant = opts.clone();
            variant.downsample.freq_strategy = strategy;
            let ctx = ItemContext::analyze(w, &variant)?;
            rows.push(ctx.qcd_row(&variant, label)?);
        }
        Ok(rows)
    };
    run_over_corpus(items, opts.jobs, runner)
}

fn run_over_corpus<F>(
    items: &[(String, Waveform)],
    jobs: usize,
    runner: F,
) -> Result<TradeoffReport, HarnessError>
where
    F: Fn(&str, &Waveform) -> Result<Vec<TradeoffRow>, HarnessError> + Sync,
{
    if items.is_empty() {
        return Err(HarnessError::EmptyCorpus);
    }
    let jobs = jobs.max(1).min(items.len());
    let mut slots: Vec<Option<Result<Vec<TradeoffRow>, HarnessError>>> =
        (0..items.len()).map(|_| None).collect();

    if jobs == 1 {
        for (slot, (id, w)) in slots.iter_mut().zip(items) {
            *slot = Some(runner(id, w));
        }
    } else {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let slot_cells: Vec<std::sync::Mutex<&mut Option<_>>> =
            slots.iter_mut().map(std::sync::Mutex::new).collect();
        std::thread::scope(|scope| {
            for _ in 0..jobs {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    if i >= items.len() {
                        break;
                    }
                    let (id, w) = &items[i];
                    let result = runner(id, w);
                    **slot_cells[i].lock().unwrap() = Some(result);
                });
            }
        });
    }

    let mut report = TradeoffReport::default();
    for ((id, _), slot) in items.iter().zip(slots) {
        let rows = slot.expect("every item visited")?;
        for mut row in rows {
            row.item = id.clone();
            report.rows.push(row);
        }
    }
    report.append_means();
    Ok(report)
}

/// Shared per-item analysis: the reference mel, its ODF, and its onsets.
struct ItemContext<'a> {
    waveform: &'a Waveform,
    mel: MelSpectrogram,
    ref_odf: metrics::Odf,
    ref_onsets: metrics::OnsetList,
}

impl<'a> ItemContext<'a> {
    fn analyze(w: &'a Waveform, opts: &HarnessOptions) -> Result<Self, HarnessError> {
        let mel = crate::dsp::mel_spectrogram(w, &opts.mel)?;
        let ref_odf = metrics::odf(&mel)?;
        let ref_onsets =
            metrics::pick_onsets(&ref_odf, opts.onset.threshold_rel, opts.onset.min_gap_s)?;
        Ok(Self {
            waveform: w,
            mel,
            ref_odf,
            ref_onsets,
        })
    }

    fn row_for_map(
        &self,
        opts: &HarnessOptions,
        signal: &str,
        map: &Mat,
        bits_per_second: f64,
        codebook_bits: f64,
    ) -> Result<TradeoffRow, HarnessError> {
        let (mse, snr_db) = metrics::reconstruction_error(map, &self.mel.values)?;
        let map_odf = metrics::odf_matrix(map, self.mel.frame_rate_hz)?;
        let pred_onsets =
            metrics::pick_onsets(&map_odf, opts.onset.threshold_rel, opts.onset.min_gap_s)?;
        let acc = metrics::onset_acc(&pred_onsets, &self.ref_onsets, opts.acc_tol_s);
        let sync_or_missing = |r: Result<f64, MetricsError>| match r {
            Ok(v) => Ok(Some(v)),
            Err(MetricsError::DegenerateDistribution) => Ok(None),
            Err(e) => Err(e),
        };
        let w_dis = sync_or_missing(metrics::w_distance(&map_odf, &self.ref_odf))?;
        let js_div = sync_or_missing(metrics::js_divergence(&map_odf, &self.ref_odf))?;
        Ok(TradeoffRow {
            signal: signal.to_string(),
            item: String::new(),
            mse,
            snr_db,
            bits_per_second,
            codebook_bits,
            onset_acc: acc,
            w_dis,
            js_div,
        })
    }

    /// Row for the quantized-decomposition signal under `opts.downsample`.
    fn qcd_row(&self, opts: &HarnessOptions, label: &str) -> Result<TradeoffRow, HarnessError> {
        let (_, stream) = container::encode_stream_from_waveform(
            self.waveform,
            &opts.mel,
            &opts.downsample,
            &opts.svq,
        )?;
        let map = container::decode_stream(&stream)?;
        let cost = metrics::complexity_report(&opts.downsample, &opts.svq, self.mel.frame_rate_hz);
        self.row_for_map(opts, label, &map, cost.bits_per_second, cost.codebook_log2)
    }
}

fn evaluate_item_signals(
    w: &Waveform,
    opts: &HarnessOptions,
) -> Result<Vec<TradeoffRow>, HarnessError> {
    let ctx = ItemContext::analyze(w, opts)?;
    let frame_rate = ctx.mel.frame_rate_hz;
    let mut rows = Vec::new();
    for kind in &opts.signals {
        let row = match kind {
            SignalKind::MelQcd => ctx.qcd_row(opts, kind.name())?,
            SignalKind::Onset => {
                let signal = baselines::onset_signal(&ctx.mel, &opts.onset)?;
                // One mask bit per frame.
                ctx.row_for_map(opts, kind.name(), &signal.map, frame_rate, 0.0)?
            }
            SignalKind::Energy => {
                let signal = baselines::energy_signal(&ctx.mel);
                // One 32-bit scalar per frame.
                ctx.row_for_map(opts, kind.name(), &signal.map, 32.0 * frame_rate, 0.0)?
            }
            SignalKind::LowresMel => {
                let signal =
                    baselines::lowres_mel_signal(&ctx.mel, opts.lowres_kf, opts.lowres_kt)?;
                let values_per_second = (ctx.mel.num_bins / opts.lowres_kf) as f64
                    * (frame_rate / opts.lowres_kt as f64);
                ctx.row_for_map(
                    opts,
                    kind.name(),
                    &signal.map,
                    32.0 * values_per_second,
                    0.0,
                )?
            }
        };
        rows.push(row);
    }
    Ok(rows)
}
