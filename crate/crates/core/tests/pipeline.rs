//! Cross-module pipeline checks: audio in, stream out, map back.

use melqcd::codebook::SvqParams;
use melqcd::container;
use melqcd::corpus::{synthesize, SynthKind, SynthSpec};
use melqcd::dsp::{mel_spectrogram, MelConfig};
use melqcd::metrics;
use melqcd::qcd::{self, DownsampleSpec, FrequencyStrategy, TemporalStrategy};

fn two_event_clip(seed: u64) -> melqcd::Waveform {
    synthesize(&SynthSpec {
        kind: SynthKind::TwoEvent { rate_hz: 0.7 },
        duration_s: 5.12,
        sample_rate_hz: 16000,
        seed,
    })
    .unwrap()
}

#[test]
fn every_strategy_pair_roundtrips_through_bytes() {
    let w = two_event_clip(3);
    let cfg = MelConfig::default();
    let temporals = [
        TemporalStrategy::RepeatDownsample,
        TemporalStrategy::Original,
        TemporalStrategy::SavgolSmooth,
        TemporalStrategy::MeanPool,
    ];
    let freqs = [
        FrequencyStrategy::DsRepeat,
        FrequencyStrategy::DsSparse,
        FrequencyStrategy::Mel8Repeat,
        FrequencyStrategy::Mel8Sparse,
    ];
    for temporal in temporals {
        for freq in freqs {
            let spec = DownsampleSpec {
                temporal_strategy: temporal,
                freq_strategy: freq,
                ..DownsampleSpec::default()
            };
            let (mel, stream) =
                container::encode_stream_from_waveform(&w, &cfg, &spec, &SvqParams::default())
                    .unwrap();
            let bytes = container::serialize(&stream);
            let parsed = container::parse(&bytes).unwrap();
            assert_eq!(parsed, stream, "{temporal:?}/{freq:?}");
            let map = container::decode_stream(&parsed).unwrap();
            assert_eq!(map.rows(), mel.num_bins);
            assert_eq!(map.cols(), mel.frames());
            assert!(map.is_finite());
        }
    }
}

#[test]
fn stored_frame_count_follows_temporal_factor() {
    let w = two_event_clip(4);
    let cfg = MelConfig::default();
    for (factor, strategy) in [
        (4usize, TemporalStrategy::RepeatDownsample),
        (8, TemporalStrategy::MeanPool),
        (4, TemporalStrategy::SavgolSmooth),
    ] {
        let spec = DownsampleSpec {
            temporal_strategy: strategy,
            temporal_factor: factor,
            ..DownsampleSpec::default()
        };
        let (mel, stream) =
            container::encode_stream_from_waveform(&w, &cfg, &spec, &SvqParams::default()).unwrap();
        assert_eq!(stream.stored_frames(), mel.frames() / factor);
        assert_eq!(stream.full_frames(), mel.frames());
    }
}

#[test]
fn quantization_is_the_only_shape_loss_at_full_rate() {
    // With the original temporal rate and repeat recovery, the map error
    // against the exact recomposition comes only from pooling+rounding the
    // shape, so it is bounded by max|S_pooled| * D per entry.
    let w = two_event_clip(5);
    let mel = mel_spectrogram(&w, &MelConfig::default()).unwrap();
    let spec = DownsampleSpec {
        temporal_strategy: TemporalStrategy::Original,
        ..DownsampleSpec::default()
    };
    let (_, stream) = container::encode_stream_from_waveform(
        &w,
        &MelConfig::default(),
        &spec,
        &SvqParams::default(),
    )
    .unwrap();
    let map = container::decode_stream(&stream).unwrap();

    let d = qcd::decompose(&mel);
    let pooled = qcd::downsample_frequency(&d.semantic, &spec).unwrap();
    let mut max_pooled: f64 = 0.0;
    for v in pooled.iter() {
        max_pooled = max_pooled.max(v.abs());
    }
    // Worst per-entry shape error: |round/clamp error| <= max(0.5, |S|-1)
    // for lambda=1, plus the f32 track rounding.
    let bound_shape = max_pooled.max(0.5) + 0.5;
    for t in 0..mel.frames() {
        let dt = d.std[t];
        for k in 0..mel.num_bins {
            let exact = d.energy[t] + pooled.get(k / 32, t) * dt;
            let got = map.get(k, t);
            assert!(
                (got - exact).abs() <= bound_shape * dt + 1e-3,
                "entry ({k},{t}): {got} vs {exact}"
            );
        }
    }
}

#[test]
fn mel8_reanalysis_differs_from_pooling_but_stays_close_in_error() {
    let w = two_event_clip(6);
    let cfg = MelConfig::default();
    let mel = mel_spectrogram(&w, &cfg).unwrap();
    let pooled_spec = DownsampleSpec {
        temporal_strategy: TemporalStrategy::Original,
        freq_strategy: FrequencyStrategy::DsRepeat,
        ..DownsampleSpec::default()
    };
    let mel8_spec = DownsampleSpec {
        freq_strategy: FrequencyStrategy::Mel8Repeat,
        ..pooled_spec.clone()
    };
    let (_, pooled) =
        container::encode_stream_from_waveform(&w, &cfg, &pooled_spec, &SvqParams::default())
            .unwrap();
    let (_, mel8) =
        container::encode_stream_from_waveform(&w, &cfg, &mel8_spec, &SvqParams::default())
            .unwrap();
    assert_ne!(pooled.codes, mel8.codes, "paths should analyze differently");
    // Both tracks come from the full-resolution analysis.
    assert_eq!(pooled.energy, mel8.energy);
    assert_eq!(pooled.std, mel8.std);

    let (mse_pooled, _) =
        metrics::reconstruction_error(&container::decode_stream(&pooled).unwrap(), &mel.values)
            .unwrap();
    let (mse_mel8, _) =
        metrics::reconstruction_error(&container::decode_stream(&mel8).unwrap(), &mel.values)
            .unwrap();
    assert!(
        mse_mel8 < 10.0 * mse_pooled.max(1e-3),
        "{mse_mel8} vs {mse_pooled}"
    );
}

#[test]
fn file_roundtrip_through_disk() {
    let dir = std::env::temp_dir().join("melqcd-pipeline");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("clip.mqcd");

    let w = two_event_clip(7);
    let (_, stream) = container::encode_stream_from_waveform(
        &w,
        &MelConfig::default(),
        &DownsampleSpec::default(),
        &SvqParams::default(),
    )
    .unwrap();
    container::write_stream(&stream, &path).unwrap();
    let loaded = container::read_stream(&path).unwrap();
    assert_eq!(loaded, stream);
    assert_eq!(
        std::fs::metadata(&path).unwrap().len() as usize,
        stream.byte_len()
    );
    std::fs::remove_file(&path).ok();
}
