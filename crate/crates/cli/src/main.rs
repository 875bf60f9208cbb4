//! Command-line front end for the mel codec toolkit: encode/decode the
//! `.mqcd` stream format, run the control-signal comparison harness,
//! synthesize test audio, and export per-frame training targets.

use clap::{Args, Parser, Subcommand, ValueEnum};
use melqcd::baselines::SignalKind;
use melqcd::codebook::SvqParams;
use melqcd::container;
use melqcd::corpus::{self, SynthKind, SynthSpec};
use melqcd::dsp::{self, MelConfig, StftConfig, Waveform};
use melqcd::harness::{self, HarnessOptions};
use melqcd::qcd::{DownsampleSpec, FrequencyStrategy, TemporalStrategy};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "melqcd",
    version,
    about = "Mel spectrogram codec and control-signal analysis toolkit",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a WAV file into an .mqcd code stream
    Encode(EncodeArgs),
    /// Decode an .mqcd stream to a mel-map CSV and optionally a waveform
    Decode(DecodeArgs),
    /// Compare control signals over a corpus and write a trade-off report
    Compare(CompareArgs),
    /// Synthesize a deterministic test signal to WAV
    Synth(SynthArgs),
    /// Export per-frame classification/regression targets from a stream
    Targets(TargetsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TemporalArg {
    /// Strided pick, recovered by repetition
    #[value(alias = "downsample")]
    Repeat,
    /// Keep the full frame rate
    Original,
    /// Savitzky-Golay smoothing, then strided pick
    #[value(alias = "smooth")]
    Savgol,
    /// Block mean
    #[value(alias = "mean-pool")]
    Mean,
}

impl From<TemporalArg> for TemporalStrategy {
    fn from(a: TemporalArg) -> Self {
        match a {
            TemporalArg::Repeat => TemporalStrategy::RepeatDownsample,
            TemporalArg::Original => TemporalStrategy::Original,
            TemporalArg::Savgol => TemporalStrategy::SavgolSmooth,
            TemporalArg::Mean => TemporalStrategy::MeanPool,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FreqArg {
    /// Pool bin groups, recover by repetition
    DsRepeat,
    /// Pool bin groups, recover sparsely at group centers
    DsSparse,
    /// Re-analyze with a small filterbank, recover by repetition
    Mel8Repeat,
    /// Re-analyze with a small filterbank, recover sparsely
    Mel8Sparse,
}

impl From<FreqArg> for FrequencyStrategy {
    fn from(a: FreqArg) -> Self {
        match a {
            FreqArg::DsRepeat => FrequencyStrategy::DsRepeat,
            FreqArg::DsSparse => FrequencyStrategy::DsSparse,
            FreqArg::Mel8Repeat => FrequencyStrategy::Mel8Repeat,
            FreqArg::Mel8Sparse => FrequencyStrategy::Mel8Sparse,
        }
    }
}

#[derive(Args)]
struct CodecFlags {
    /// Quantization bound for shape values
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    lambda: u32,
    /// Reduced frequency bins (K')
    #[arg(long, default_value_t = 8)]
    kprime: usize,
    /// Temporal reduction strategy
    #[arg(long, value_enum, default_value_t = TemporalArg::Repeat)]
    temporal: TemporalArg,
    /// Temporal reduction factor
    #[arg(long, default_value_t = 4)]
    temporal_factor: usize,
    /// Frequency reduction/recovery strategy
    #[arg(long, value_enum, default_value_t = FreqArg::DsRepeat)]
    freq: FreqArg,
    /// Savitzky-Golay window (odd)
    #[arg(long, default_value_t = 9)]
    savgol_window: usize,
    /// Savitzky-Golay polynomial order
    #[arg(long, default_value_t = 3)]
    savgol_polyorder: usize,
}

impl CodecFlags {
    fn downsample_spec(&self) -> DownsampleSpec {
        DownsampleSpec {
            temporal_strategy: self.temporal.into(),
            temporal_factor: self.temporal_factor,
            freq_strategy: self.freq.into(),
            freq_out: self.kprime,
            savgol_window: self.savgol_window,
            savgol_polyorder: self.savgol_polyorder,
        }
    }

    fn svq_params(&self) -> SvqParams {
        SvqParams {
            lambda: self.lambda,
            dims: self.kprime,
            factor_split: 2,
        }
    }
}

#[derive(Args)]
struct MelFlags {
    /// Mel bins (K)
    #[arg(long, default_value_t = 256)]
    bins: usize,
    /// FFT window length
    #[arg(long, default_value_t = 1024)]
    n_fft: usize,
    /// Hop length in samples
    #[arg(long, default_value_t = 160)]
    hop: usize,
    /// Lowest mel band edge in Hz
    #[arg(long, default_value_t = 0.0)]
    fmin: f64,
    /// Highest mel band edge in Hz
    #[arg(long, default_value_t = 8000.0)]
    fmax: f64,
}

impl MelFlags {
    fn mel_config(&self) -> MelConfig {
        MelConfig {
            num_bins: self.bins,
            f_min_hz: self.fmin,
            f_max_hz: self.fmax,
            stft: StftConfig {
                n_fft: self.n_fft,
                hop: self.hop,
                ..StftConfig::default()
            },
            ..MelConfig::default()
        }
    }
}

#[derive(Args)]
struct EncodeArgs {
    /// Input WAV file
    input: PathBuf,
    /// Output .mqcd path
    #[arg(short, long)]
    output: PathBuf,
    /// Resample the input to this rate before analysis
    #[arg(long)]
    resample: Option<u32>,
    #[command(flatten)]
    codec: CodecFlags,
    #[command(flatten)]
    mel: MelFlags,
}

#[derive(Args)]
struct DecodeArgs {
    /// Input .mqcd file
    input: PathBuf,
    /// Output CSV path for the recomposed mel map (one row per mel bin)
    #[arg(short, long)]
    output: PathBuf,
    /// Also reconstruct a waveform to this WAV path
    #[arg(long)]
    wav: Option<PathBuf>,
    /// Griffin-Lim iterations for --wav
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u32).range(1..))]
    iters: u32,
}

#[derive(Args)]
struct CompareArgs {
    /// Directory of WAV files to evaluate
    #[arg(long, conflicts_with = "synth_default")]
    corpus: Option<PathBuf>,
    /// Use the built-in 20-item synthetic corpus
    #[arg(long)]
    synth_default: bool,
    /// Output report CSV
    #[arg(short, long)]
    output: PathBuf,
    /// Signals to evaluate (comma separated: qcd,onset,energy,lowres)
    #[arg(long, default_value = "qcd,onset,energy,lowres", value_delimiter = ',')]
    signals: Vec<String>,
    /// Run a strategy ablation instead of the signal comparison
    #[arg(long, value_parser = ["temporal", "freq"])]
    ablate: Option<String>,
    /// Seed for the synthetic corpus
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Parallel corpus workers
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: u32,
    /// Also write per-figure data files under this path prefix
    #[arg(long)]
    plot_data: Option<PathBuf>,
    /// Low-resolution mel pooling factor over frequency
    #[arg(long, default_value_t = 32)]
    lowres_kf: usize,
    /// Low-resolution mel pooling factor over time
    #[arg(long, default_value_t = 4)]
    lowres_kt: usize,
    /// Quantization bound for the qcd signal
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    lambda: u32,
    /// Reduced frequency bins for the qcd signal
    #[arg(long, default_value_t = 8)]
    kprime: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    ImpulseTrain,
    Tone,
    Chirp,
    AmNoise,
    TwoEvent,
}

#[derive(Args)]
struct SynthArgs {
    /// Signal family
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Output WAV path
    #[arg(short, long)]
    output: PathBuf,
    /// Event rate in Hz (impulse-train, two-event)
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    /// Tone frequency in Hz
    #[arg(long, default_value_t = 440.0)]
    freq: f64,
    /// Chirp start frequency in Hz
    #[arg(long, default_value_t = 200.0)]
    f0: f64,
    /// Chirp end frequency in Hz
    #[arg(long, default_value_t = 2000.0)]
    f1: f64,
    /// Noise modulation rate in Hz
    #[arg(long, default_value_t = 2.0)]
    mod_rate: f64,
    /// Duration in seconds
    #[arg(long, default_value_t = 10.24)]
    dur: f64,
    #[arg(long, default_value_t = 16000)]
    sample_rate: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TargetsArgs {
    /// Input .mqcd file
    input: PathBuf,
    /// Output CSV path
    #[arg(short, long)]
    output: PathBuf,
}

/// Runtime failures exit 1; flag/parameter validation failures exit 2.
enum CliError {
    Runtime(String),
    Usage(String),
}

impl CliError {
    fn runtime(e: impl std::fmt::Display) -> Self {
        Self::Runtime(e.to_string())
    }
    fn usage(e: impl std::fmt::Display) -> Self {
        Self::Usage(e.to_string())
    }
}

fn log_verbose(msg: &str) {
    let on = std::env::var("MELQCD_LOG")
        .map(|v| !v.is_empty() && v != "0")
        .unwrap_or(false);
    if on {
        eprintln!("[melqcd] {msg}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Encode(args) => run_encode(args),
        Command::Decode(args) => run_decode(args),
        Command::Compare(args) => run_compare(args),
        Command::Synth(args) => run_synth(args),
        Command::Targets(args) => run_targets(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
    }
}

fn run_encode(args: EncodeArgs) -> Result<(), CliError> {
    let mut wave = corpus::read_wav(&args.input).map_err(CliError::runtime)?;
    log_verbose(&format!(
        "read {} samples at {} Hz",
        wave.samples.len(),
        wave.sample_rate_hz
    ));
    if let Some(rate) = args.resample {
        wave = corpus::resample(&wave, rate).map_err(CliError::usage)?;
        log_verbose(&format!("resampled to {rate} Hz"));
    }
    let cfg = args.mel.mel_config();
    cfg.validate(wave.sample_rate_hz).map_err(CliError::usage)?;
    let spec = args.codec.downsample_spec();
    let svq = args.codec.svq_params();
    svq.validate().map_err(CliError::usage)?;
    let (_, stream) = container::encode_stream_from_waveform(&wave, &cfg, &spec, &svq)
        .map_err(CliError::runtime)?;
    container::write_stream(&stream, &args.output).map_err(CliError::runtime)?;
    log_verbose(&format!(
        "wrote {} ({} stored frames, {} bytes)",
        args.output.display(),
        stream.stored_frames(),
        stream.byte_len()
    ));
    Ok(())
}

fn run_decode(args: DecodeArgs) -> Result<(), CliError> {
    let stream = container::read_stream(&args.input).map_err(CliError::runtime)?;
    let map = container::decode_stream(&stream).map_err(CliError::runtime)?;
    let mut csv = String::new();
    for k in 0..map.rows() {
        let row: Vec<String> = (0..map.cols())
            .map(|t| format!("{}", map.get(k, t)))
            .collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    std::fs::write(&args.output, csv).map_err(CliError::runtime)?;
    log_verbose(&format!(
        "decoded {} frames x {} bins to {}",
        map.cols(),
        map.rows(),
        args.output.display()
    ));

    if let Some(wav_path) = &args.wav {
        let frame_rate = stream.sample_rate_hz as f64 / stream.hop as f64;
        let mel = dsp::MelSpectrogram {
            num_bins: map.rows(),
            frame_rate_hz: frame_rate,
            params: MelConfig {
                num_bins: map.rows(),
                stft: StftConfig {
                    hop: stream.hop as usize,
                    ..StftConfig::default()
                },
                ..MelConfig::default()
            },
            values: map,
        };
        let wave = dsp::griffin_lim(&mel, args.iters).map_err(CliError::runtime)?;
        corpus::write_wav(&wave, wav_path).map_err(CliError::runtime)?;
        log_verbose(&format!("reconstructed waveform at {}", wav_path.display()));
    }
    Ok(())
}

fn parse_signals(names: &[String]) -> Result<Vec<SignalKind>, CliError> {
    names
        .iter()
        .map(|name| match name.as_str() {
            "qcd" => Ok(SignalKind::MelQcd),
            "onset" => Ok(SignalKind::Onset),
            "energy" => Ok(SignalKind::Energy),
            "lowres" => Ok(SignalKind::LowresMel),
            other => Err(CliError::usage(format!("unknown signal kind '{other}'"))),
        })
        .collect()
}

fn load_corpus_dir(dir: &Path) -> Result<Vec<(String, Waveform)>, CliError> {
    let mut items = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(CliError::runtime)?;
    for entry in entries {
        let path = entry.map_err(CliError::runtime)?.path();
        if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"))
        {
            let id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let wave = corpus::read_wav(&path).map_err(CliError::runtime)?;
            items.push((id, wave));
        }
    }
    items.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(items)
}

fn run_compare(args: CompareArgs) -> Result<(), CliError> {
    let items = if args.synth_default {
        harness::synthesize_default_corpus(args.seed).map_err(CliError::runtime)?
    } else if let Some(dir) = &args.corpus {
        load_corpus_dir(dir)?
    } else {
        return Err(CliError::usage(
            "either --corpus <DIR> or --synth-default is required",
        ));
    };
    if items.is_empty() {
        return Err(CliError::runtime("empty corpus"));
    }
    log_verbose(&format!("evaluating {} corpus items", items.len()));

    let mut opts = HarnessOptions {
        signals: parse_signals(&args.signals)?,
        lowres_kf: args.lowres_kf,
        lowres_kt: args.lowres_kt,
        jobs: args.jobs as usize,
        ..HarnessOptions::default()
    };
    opts.svq.lambda = args.lambda;
    opts.svq.dims = args.kprime;
    opts.downsample.freq_out = args.kprime;

    let report = match args.ablate.as_deref() {
        None => harness::evaluate_corpus(&items, &opts),
        Some("temporal") => harness::ablate_temporal(&items, &opts),
        Some("freq") => harness::ablate_frequency(&items, &opts),
        Some(other) => return Err(CliError::usage(format!("unknown ablation '{other}'"))),
    }
    .map_err(CliError::runtime)?;

    std::fs::write(&args.output, report.to_csv()).map_err(CliError::runtime)?;
    log_verbose(&format!("wrote report to {}", args.output.display()));

    if let Some(prefix) = &args.plot_data {
        // Completeness-vs-complexity scatter: one point per signal.
        let mut data = String::from("signal,bits_per_second,mse\n");
        for row in report.rows.iter().filter(|r| r.item == "mean") {
            data.push_str(&format!(
                "{},{:.3},{:.9}\n",
                row.signal, row.bits_per_second, row.mse
            ));
        }
        let path = PathBuf::from(format!("{}.tradeoff.csv", prefix.display()));
        std::fs::write(&path, data).map_err(CliError::runtime)?;
        log_verbose(&format!("wrote plot data to {}", path.display()));
    }
    Ok(())
}

fn run_synth(args: SynthArgs) -> Result<(), CliError> {
    let kind = match args.kind {
        KindArg::ImpulseTrain => SynthKind::ImpulseTrain { rate_hz: args.rate },
        KindArg::Tone => SynthKind::Tone { freq_hz: args.freq },
        KindArg::Chirp => SynthKind::Chirp {
            f0_hz: args.f0,
            f1_hz: args.f1,
        },
        KindArg::AmNoise => SynthKind::AmNoise {
            mod_rate_hz: args.mod_rate,
        },
        KindArg::TwoEvent => SynthKind::TwoEvent { rate_hz: args.rate },
    };
    let spec = SynthSpec {
        kind,
        duration_s: args.dur,
        sample_rate_hz: args.sample_rate,
        seed: args.seed,
    };
    spec.validate().map_err(CliError::usage)?;
    let wave = corpus::synthesize(&spec).map_err(CliError::runtime)?;
    corpus::write_wav(&wave, &args.output).map_err(CliError::runtime)?;
    log_verbose(&format!(
        "wrote {} ({} samples)",
        args.output.display(),
        wave.samples.len()
    ));
    Ok(())
}

fn run_targets(args: TargetsArgs) -> Result<(), CliError> {
    let stream = container::read_stream(&args.input).map_err(CliError::runtime)?;
    container::export_targets(&stream, &args.output).map_err(CliError::runtime)?;
    log_verbose(&format!(
        "wrote {} target rows to {}",
        stream.stored_frames(),
        args.output.display()
    ));
    Ok(())
}
