//! Runs the ten acceptance criteria at their stated tolerances and prints
//! one PASS/FAIL line per criterion.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use oscdet::config::PipelineConfig;
use oscdet::harness::{analytic_signal, error_stats, measure_transfer, wrap_deg};
use oscdet::pipeline::Pipeline;
use oscdet::synth::{generate, DatasetSpec};
use oscdet::validate::{mac_criterion, report_criteria, validate, Criterion, ValidationReport};

/// A pure sine seen through the analytic oracle has a one-bin error histogram.
fn sine_oracle_ok() -> bool {
    let rate = 500.0;
    let f = 17.0;
    let x: Vec<f64> = (0..20_000).map(|n| (2.0 * PI * f * n as f64 / rate).sin()).collect();
    let a = analytic_signal(&x, rate, 1);
    let errs: Vec<f64> = (1000..19_000)
        .map(|n| {
            let truth = (f * n as f64 / rate).fract() * 360.0;
            wrap_deg(a.phase_deg[n] - truth)
        })
        .collect();
    error_stats(&errs).and_then(|s| s.fwhm_deg) == Some(2.0)
}

/// The transfer oracle reports unit gain and zero phase for identical signals.
fn transfer_oracle_ok() -> bool {
    let data = common::golden_dataset();
    let x = data.signal.to_f64();
    let t = measure_transfer(&x, &x, data.signal.rate_sps as f64, 4.0, 100.0, 24);
    !t.gain.is_empty()
        && t.gain.iter().all(|g| (g - 1.0).abs() < 1e-9)
        && t.phase_rad.iter().all(|p| p.abs() < 1e-9)
}

fn property_criterion(default: &ValidationReport, degraded: &ValidationReport, total_s: f64) -> Criterion {
    let worst_int = default
        .bands
        .iter()
        .chain(&degraded.bands)
        .map(|b| b.int_vs_float_pct)
        .fold(0.0, f64::max);
    let safety = default.safety.ok() && degraded.safety.ok();
    let oracles = sine_oracle_ok() && transfer_oracle_ok();
    Criterion::new(
        10,
        "properties and runtime",
        worst_int < 0.5 && safety && oracles && total_s < 300.0,
        format!(
            "int vs float {worst_int:.3}% rms, safety {}, oracles {}, validate {total_s:.1} s",
            if safety { "ok" } else { "violated" },
            if oracles { "ok" } else { "failed" }
        ),
    )
}

fn determinism_criterion() -> Criterion {
    let first = common::golden_checksums();
    let second = common::golden_checksums();
    let golden = common::read_golden();
    let repeat = first == second;
    let matches = golden.as_ref() == Some(&first);
    Criterion::new(
        9,
        "determinism",
        repeat && matches,
        format!(
            "{} traces, repeat {}, golden {}",
            first.len(),
            if repeat { "identical" } else { "differs" },
            match (&golden, matches) {
                (None, _) => "missing",
                (Some(_), true) => "identical",
                (Some(_), false) => "differs",
            }
        ),
    )
}

#[test]
fn acceptance() {
    let cfg = PipelineConfig::workstation();
    let started = Instant::now();
    let default_data = generate(&DatasetSpec::default()).unwrap();
    let (default, _) = validate(&cfg, &default_data).unwrap();
    let degraded_data = generate(&DatasetSpec::second_profile(DatasetSpec::default().seed)).unwrap();
    let (degraded, _) = validate(&cfg, &degraded_data).unwrap();
    let total_s = started.elapsed().as_secs_f64();

    println!("default dataset:\n{}", default.to_text());
    println!("degraded dataset:\n{}", degraded.to_text());

    let bench_data = generate(&DatasetSpec {
        duration_s: 20.0,
        ..DatasetSpec::default()
    })
    .unwrap();
    let macs = Pipeline::new(&PipelineConfig::embedded())
        .unwrap()
        .run(&bench_data.signal)
        .unwrap()
        .macs;

    let mut criteria = report_criteria(&default, &degraded);
    criteria.push(mac_criterion(&macs));
    criteria.push(determinism_criterion());
    criteria.push(property_criterion(&default, &degraded, total_s));

    for c in &criteria {
        println!("{}", c.line());
    }
    let failed: Vec<u8> = criteria.iter().filter(|c| !c.pass).map(|c| c.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
