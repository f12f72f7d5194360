use oscdet::config::PipelineConfig;
use oscdet::pipeline::Pipeline;
use oscdet::synth::{generate, DatasetSpec, ToneBand};

#[test]
fn no_detections_in_noise_only_recording() {
    let data = generate(&DatasetSpec {
        seed: 21,
        duration_s: 62.0,
        bands: vec![],
        ..DatasetSpec::default()
    })
    .unwrap();
    let trace = Pipeline::new(&PipelineConfig::workstation())
        .unwrap()
        .run(&data.signal)
        .unwrap();
    assert!(trace.events.is_empty(), "{} false events", trace.events.len());
    assert!(trace.pulses.is_empty());
}

#[test]
fn beta_tones_detected_promptly() {
    let spec = DatasetSpec {
        seed: 4,
        duration_s: 120.0,
        bands: vec![ToneBand {
            name: "beta".into(),
            lo_hz: 12.0,
            hi_hz: 21.0,
        }],
        ..DatasetSpec::default()
    };
    let data = generate(&spec).unwrap();
    let cfg = PipelineConfig::embedded();
    let trace = Pipeline::new(&cfg).unwrap().run(&data.signal).unwrap();
    let d = cfg.decimation as i64;
    let mut lat = vec![];
    for t in &data.tones {
        let period = spec.rate_sps as f64 / t.f0_hz;
        if let Some(e) = trace
            .events
            .iter()
            .find(|e| e.onset_sample * d >= t.start_sample && e.onset_sample * d <= t.offset_sample)
        {
            lat.push((e.onset_sample * d - t.onset_sample) as f64 / period);
        }
    }
    assert!(lat.len() * 10 >= data.tones.len() * 8, "{}/{} detected", lat.len(), data.tones.len());
    lat.sort_by(f64::total_cmp);
    let median = lat[lat.len() / 2];
    assert!(median <= 1.5, "median onset latency {median:.2} periods");
}

#[test]
fn winner_follows_tone_in_dense_bank() {
    let cfg = PipelineConfig::dense(8.0, 13);
    // Neighbouring bands overlap by half their width and are flat in the
    // pass band, so the tone sits at one band's center where the
    // neighbours are at their -3 dB corners.
    let target = &cfg.bands[5];
    let f = target.center_hz();
    let spec = DatasetSpec {
        seed: 8,
        duration_s: 60.0,
        bands: vec![ToneBand {
            name: "center".into(),
            lo_hz: f * 0.995,
            hi_hz: f * 1.005,
        }],
        max_chirp: 0.0,
        // SNR is measured in the 1% wide tone band; 35 dB there is about
        // 20 dB over the noise in the whole target band
        snr_db: 35.0,
        min_periods: 20.0,
        max_periods: 30.0,
        ..DatasetSpec::default()
    };
    let data = generate(&spec).unwrap();
    let trace = Pipeline::new(&cfg).unwrap().run(&data.signal).unwrap();
    let d = cfg.decimation as i64;
    let best = target.id;
    let (mut hits, mut total) = (0, 0);
    for t in &data.tones {
        // second half of each tone, once smoothing has settled
        let mid = (t.onset_sample + t.offset_sample) / 2 / d;
        for k in mid..t.offset_sample / d {
            total += 1;
            hits += (trace.winner[k as usize] == best) as usize;
        }
    }
    assert!(total > 0);
    assert!(hits * 10 >= total * 9, "winner on target {hits}/{total}");
}

#[test]
fn dense_bank_cost_scales_with_band_count() {
    let data = generate(&DatasetSpec {
        duration_s: 10.0,
        ..DatasetSpec::default()
    })
    .unwrap();
    let band_cost = |count: usize| {
        let t = Pipeline::new(&PipelineConfig::dense(8.0, count))
            .unwrap()
            .run(&data.signal)
            .unwrap();
        t.macs.stage("band filters").unwrap()
    };
    let one = band_cost(1);
    assert_eq!(band_cost(16), 16 * one);
    assert_eq!(one, 10 * data.signal.len() as u64 / 5);
}
