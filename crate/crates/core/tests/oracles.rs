//! Self-tests of the synthetic generator and the analysis oracles.

use std::f64::consts::PI;

use oscdet::fft;
use oscdet::harness::{analytic_signal, error_stats, measure_transfer, wrap_deg};
use oscdet::synth::{generate, red_noise, DatasetSpec};
use rand::SeedableRng;

fn band_power(x: &[f64], rate: f64, lo: f64, hi: f64) -> Vec<f64> {
    fft::apply_real_gain(x, |f| {
        let hz = f.abs() * rate;
        if hz >= lo && hz <= hi {
            1.0
        } else {
            0.0
        }
    })
}

fn mean_square(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

fn check_snr(spec: DatasetSpec) {
    let data = generate(&spec).unwrap();
    let rate = spec.rate_sps as f64;
    let noise: Vec<f64> = data.noise.iter().map(|&v| v as f64).collect();
    assert!(data.tones.len() > 50);
    for t in &data.tones {
        let b = spec.bands.iter().find(|b| b.name == t.band).unwrap();
        let in_band = band_power(&noise, rate, b.lo_hz, b.hi_hz);
        let (on, off) = (t.onset_sample as usize, t.offset_sample as usize);
        let wave = t.waveform(rate);
        let core = &wave[(t.onset_sample - t.start_sample) as usize..(t.offset_sample - t.start_sample) as usize];
        let snr = 10.0 * (mean_square(core) / mean_square(&in_band[on..off])).log10();
        assert!((snr - spec.snr_db).abs() <= 1.0, "{} at {}: {snr:.2} dB", t.band, t.onset_sample);
    }
}

#[test]
fn tones_have_requested_snr() {
    check_snr(DatasetSpec {
        duration_s: 60.0,
        ..DatasetSpec::default()
    });
}

#[test]
fn degraded_tones_have_requested_snr() {
    check_snr(DatasetSpec {
        duration_s: 60.0,
        ..DatasetSpec::second_profile(3)
    });
}

#[test]
fn signal_is_noise_plus_annotated_tones() {
    let data = generate(&DatasetSpec {
        duration_s: 60.0,
        ..DatasetSpec::second_profile(5)
    })
    .unwrap();
    let rate = data.spec.rate_sps as f64;
    let mut sum = vec![0.0; data.noise.len()];
    for t in &data.tones {
        for (k, v) in t.waveform(rate).into_iter().enumerate() {
            sum[t.start_sample as usize + k] += v;
        }
    }
    for (n, (&s, &x)) in data.signal.samples.iter().zip(&data.noise).enumerate() {
        let expected = x + sum[n].round() as i32;
        assert_eq!(s, expected, "sample {n}");
    }
}

#[test]
fn red_noise_has_inverse_square_psd() {
    let rate = 2500.0;
    let n = 1 << 18;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let x = red_noise(&mut rng, n, rate, 2.0, 200.0, 600.0);
    let rms = mean_square(&x).sqrt();
    assert!((rms - 600.0).abs() < 1e-6);

    // Welch-style average of 4096-point periodograms
    let seg = 4096;
    let mut psd = vec![0.0; seg / 2];
    for chunk in x.chunks_exact(seg) {
        let s = fft::real_spectrum(chunk);
        for (p, v) in psd.iter_mut().zip(&s) {
            *p += v.norm_sqr();
        }
    }
    let pts: Vec<(f64, f64)> = (1..seg / 2)
        .map(|k| (k as f64 * rate / seg as f64, psd[k]))
        .filter(|&(f, _)| (4.0..=150.0).contains(&f))
        .map(|(f, p)| (f.ln(), p.ln()))
        .collect();
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / m, sy / m);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope + 2.0).abs() <= 0.2, "slope {slope}");
}

#[test]
fn generation_is_seeded() {
    let spec = DatasetSpec {
        duration_s: 20.0,
        ..DatasetSpec::default()
    };
    assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    let other = generate(&DatasetSpec { seed: 2, ..spec.clone() }).unwrap();
    assert_ne!(other.signal, generate(&spec).unwrap().signal);
}

#[test]
fn analytic_phase_of_sine_is_exact() {
    let rate = 500.0;
    for f in [5.0, 20.0, 61.0] {
        let x: Vec<f64> = (0..10_000).map(|n| (2.0 * PI * f * n as f64 / rate).sin()).collect();
        let a = analytic_signal(&x, rate, 1);
        let errs: Vec<f64> = (500..9500)
            .map(|n| wrap_deg(a.phase_deg[n] - (f * n as f64 / rate).fract() * 360.0))
            .collect();
        let s = error_stats(&errs).unwrap();
        assert_eq!(s.fwhm_deg, Some(2.0));
        assert!(s.median_deg.abs() < 1e-6);
        assert!((a.magnitude[5000] - 1.0).abs() < 1e-6);
        assert!((a.inst_freq_hz[5000] - f).abs() < 1e-6);
    }
}

#[test]
fn transfer_of_pure_delay() {
    let rate = 500.0;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    let x = red_noise(&mut rng, 1 << 14, rate, 2.0, 200.0, 100.0);
    let d = 3;
    let y: Vec<f64> = (0..x.len()).map(|n| x[(n + x.len() - d) % x.len()]).collect();
    let t = measure_transfer(&x, &y, rate, 4.0, 100.0, 24);
    for (&g, &tau) in t.gain.iter().zip(&t.phase_delay_s) {
        // the phase turns slightly across each 1/24-octave bin, which
        // shaves a little off the averaged gain
        assert!((g - 1.0).abs() < 1e-2, "gain {g}");
        assert!((tau * rate - d as f64).abs() < 1e-2, "delay {}", tau * rate);
    }
}
