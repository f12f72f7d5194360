//! Hysteresis oscillation detector with dwell times and an activation delay.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::SampleQ14;

/// Fixed-point scale of threshold multipliers.
const K_Q: u32 = 8;
/// Fixed-point scale of the adaptive baseline.
const BASE_Q: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Thresholds {
    Fixed {
        on: SampleQ14,
        off: SampleQ14,
    },
    /// Thresholds are multiples of a slow exponential average of the band
    /// magnitude. The average is frozen while an event is pending or active
    /// and detection is suppressed for the first `warmup_samples`.
    Adaptive {
        k_on: f64,
        k_off: f64,
        tau_samples: u32,
        warmup_samples: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub thresholds: Thresholds,
    /// Extra consecutive samples above `on` before an onset is accepted.
    #[serde(default)]
    pub on_dwell: u32,
    /// Extra consecutive samples below `off` before an offset is accepted.
    #[serde(default)]
    pub off_dwell: u32,
    /// Samples between onset acceptance and flag assertion.
    #[serde(default)]
    pub activation_delay: u32,
}

impl DetectorConfig {
    pub fn fixed(on: SampleQ14, off: SampleQ14) -> Self {
        Self {
            thresholds: Thresholds::Fixed { on, off },
            on_dwell: 0,
            off_dwell: 0,
            activation_delay: 0,
        }
    }

    /// Adaptive thresholds at 3x/2x a 10 s baseline with a 2 s warm-up.
    pub fn adaptive(rate_sps: u32) -> Self {
        Self {
            thresholds: Thresholds::Adaptive {
                k_on: 3.0,
                k_off: 2.0,
                tau_samples: 10 * rate_sps,
                warmup_samples: 2 * rate_sps,
            },
            on_dwell: 0,
            off_dwell: 0,
            activation_delay: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.thresholds {
            Thresholds::Fixed { on, off } => {
                if off >= on || off < 0 {
                    return Err(Error::config(format!(
                        "detector thresholds need 0 <= off < on, got on={on} off={off}"
                    )));
                }
            }
            Thresholds::Adaptive {
                k_on,
                k_off,
                tau_samples,
                ..
            } => {
                if !(k_off.is_finite() && k_on.is_finite()) || k_off < 0.0 || k_off >= k_on || k_on > 1000.0 {
                    return Err(Error::config(format!(
                        "detector multipliers need 0 <= k_off < k_on, got k_on={k_on} k_off={k_off}"
                    )));
                }
                if tau_samples == 0 {
                    return Err(Error::config("detector baseline time constant must be positive"));
                }
            }
        }
        Ok(())
    }
}

/// One detected oscillation; `offset_sample` is `None` while still active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OscillationEvent {
    pub band_id: u32,
    /// First sample of the run that crossed the on threshold.
    pub onset_sample: i64,
    /// Sample at which the detection flag was raised.
    pub asserted_sample: i64,
    pub offset_sample: Option<i64>,
    pub peak_magnitude: SampleQ14,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorEdge {
    Onset(OscillationEvent),
    Offset(OscillationEvent),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DetectorOutput {
    pub detected: bool,
    pub edge: Option<DetectorEdge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Idle,
    Pending { since: i64 },
    Active,
}

#[derive(Debug, Clone)]
pub struct Detector {
    band_id: u32,
    cfg: DetectorConfig,
    k_on_q: i64,
    k_off_q: i64,
    phase: Phase,
    over_run: u32,
    under_run: u32,
    run_start: i64,
    event: OscillationEvent,
    baseline: i64,
    seen: u64,
    macs: u64,
}

impl Detector {
    pub fn new(band_id: u32, cfg: DetectorConfig) -> Result<Self> {
        cfg.validate()?;
        let (k_on_q, k_off_q) = match cfg.thresholds {
            Thresholds::Adaptive { k_on, k_off, .. } => (
                (k_on * (1 << K_Q) as f64).round() as i64,
                (k_off * (1 << K_Q) as f64).round() as i64,
            ),
            Thresholds::Fixed { .. } => (0, 0),
        };
        Ok(Self {
            band_id,
            cfg,
            k_on_q,
            k_off_q,
            phase: Phase::Idle,
            over_run: 0,
            under_run: 0,
            run_start: 0,
            event: OscillationEvent {
                band_id,
                onset_sample: 0,
                asserted_sample: 0,
                offset_sample: None,
                peak_magnitude: 0,
            },
            baseline: 0,
            seen: 0,
            macs: 0,
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    pub fn band_id(&self) -> u32 {
        self.band_id
    }

    pub fn macs(&self) -> u64 {
        self.macs
    }

    pub fn is_detected(&self) -> bool {
        self.phase == Phase::Active
    }

    pub fn reset(&mut self) {
        self.phase = Phase::Idle;
        self.over_run = 0;
        self.under_run = 0;
        self.baseline = 0;
        self.seen = 0;
        self.macs = 0;
    }

    /// Current `(on, off)` thresholds.
    pub fn thresholds(&self) -> (SampleQ14, SampleQ14) {
        match self.cfg.thresholds {
            Thresholds::Fixed { on, off } => (on, off),
            Thresholds::Adaptive { .. } => {
                let scale = |k: i64| {
                    let v = (self.baseline * k + (1 << (BASE_Q + K_Q - 1))) >> (BASE_Q + K_Q);
                    v.min(i32::MAX as i64) as i32
                };
                (scale(self.k_on_q), scale(self.k_off_q))
            }
        }
    }

    fn warmed_up(&self) -> bool {
        match self.cfg.thresholds {
            Thresholds::Fixed { .. } => true,
            Thresholds::Adaptive { warmup_samples, .. } => self.seen >= warmup_samples as u64,
        }
    }

    fn update_baseline(&mut self, m: SampleQ14) {
        let Thresholds::Adaptive { tau_samples, .. } = self.cfg.thresholds else {
            return;
        };
        // running mean until one time constant has elapsed, then EMA
        self.seen += 1;
        let tau = (self.seen).min(tau_samples as u64) as i64;
        let target = (m as i64) << BASE_Q;
        self.baseline += (target - self.baseline + tau / 2).div_euclid(tau);
        self.macs += 3;
    }

    /// Consumes the band magnitude at sample `n`. Pass `None` while the
    /// estimate is invalid; that counts as zero magnitude and leaves the
    /// adaptive baseline untouched.
    pub fn tick(&mut self, magnitude: Option<SampleQ14>, n: i64) -> DetectorOutput {
        let m = magnitude.unwrap_or(0);
        let (on, off) = self.thresholds();
        let over = m >= on && m > 0 && self.warmed_up();
        let under = m < off;
        let mut edge = None;

        match self.phase {
            Phase::Idle => {
                if over {
                    if self.over_run == 0 {
                        self.run_start = n;
                        self.event.peak_magnitude = 0;
                    }
                    self.over_run += 1;
                    self.event.peak_magnitude = self.event.peak_magnitude.max(m);
                    if self.over_run > self.cfg.on_dwell {
                        self.under_run = 0;
                        self.phase = Phase::Pending { since: n };
                    }
                } else {
                    self.over_run = 0;
                }
            }
            Phase::Pending { .. } | Phase::Active => {
                self.event.peak_magnitude = self.event.peak_magnitude.max(m);
                if under {
                    self.under_run += 1;
                } else {
                    self.under_run = 0;
                }
                if self.under_run > self.cfg.off_dwell {
                    if self.phase == Phase::Active {
                        self.event.offset_sample = Some(n);
                        edge = Some(DetectorEdge::Offset(self.event));
                    }
                    self.phase = Phase::Idle;
                    self.over_run = 0;
                }
            }
        }

        if let Phase::Pending { since } = self.phase {
            if n - since >= self.cfg.activation_delay as i64 {
                self.phase = Phase::Active;
                self.event = OscillationEvent {
                    band_id: self.band_id,
                    onset_sample: self.run_start,
                    asserted_sample: n,
                    offset_sample: None,
                    peak_magnitude: self.event.peak_magnitude,
                };
                edge = Some(DetectorEdge::Onset(self.event));
            }
        }

        if self.phase == Phase::Idle && self.over_run == 0 && magnitude.is_some() {
            self.update_baseline(m);
        }

        DetectorOutput {
            detected: self.phase == Phase::Active,
            edge,
        }
    }
}

/// Writes events as `band_id,onset_sample,asserted_sample,offset_sample,peak_magnitude`;
/// an event still active at the end of the record has an empty offset.
pub fn write_events_csv<W: Write>(events: &[OscillationEvent], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["band_id", "onset_sample", "asserted_sample", "offset_sample", "peak_magnitude"])?;
    for e in events {
        wr.write_record([
            e.band_id.to_string(),
            e.onset_sample.to_string(),
            e.asserted_sample.to_string(),
            e.offset_sample.map(|v| v.to_string()).unwrap_or_default(),
            e.peak_magnitude.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Runs a detector over a magnitude trace and collects completed and
/// still-open events.
pub fn detect_trace(det: &mut Detector, magnitudes: &[Option<SampleQ14>]) -> Vec<OscillationEvent> {
    let mut events = vec![];
    let mut open: Option<OscillationEvent> = None;
    for (n, &m) in magnitudes.iter().enumerate() {
        match det.tick(m, n as i64).edge {
            Some(DetectorEdge::Onset(e)) => open = Some(e),
            Some(DetectorEdge::Offset(e)) => {
                events.push(e);
                open = None;
            }
            None => {}
        }
    }
    events.extend(open);
    events
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(cfg: DetectorConfig, m: &[i32]) -> (Vec<bool>, Vec<OscillationEvent>) {
        let mut d = Detector::new(1, cfg).unwrap();
        let mut flags = vec![];
        let mut evs = vec![];
        for (n, &v) in m.iter().enumerate() {
            let o = d.tick(Some(v), n as i64);
            flags.push(o.detected);
            if let Some(DetectorEdge::Offset(e)) = o.edge {
                evs.push(e);
            }
        }
        (flags, evs)
    }

    #[test]
    fn step_with_activation_delay() {
        let mut cfg = DetectorConfig::fixed(100, 50);
        cfg.activation_delay = 10;
        let m: Vec<i32> = (0..100).map(|n| if n >= 20 { 200 } else { 0 }).collect();
        let (flags, _) = run(cfg, &m);
        assert_eq!(flags.iter().position(|&f| f), Some(30));
    }

    #[test]
    fn hysteresis_holds_between_thresholds() {
        let m = [0, 150, 150, 75, 75, 75, 40, 75, 75];
        let (flags, evs) = run(DetectorConfig::fixed(100, 50), &m);
        assert_eq!(flags, [false, true, true, true, true, true, false, false, false]);
        assert_eq!(evs.len(), 1);
        assert_eq!(evs[0].onset_sample, 1);
        assert_eq!(evs[0].offset_sample, Some(6));
        assert_eq!(evs[0].peak_magnitude, 150);
    }

    #[test]
    fn on_dwell_rejects_short_bursts() {
        let mut cfg = DetectorConfig::fixed(100, 50);
        cfg.on_dwell = 3;
        let m = [0, 200, 200, 200, 0, 200, 200, 200, 200, 200, 0];
        let (flags, evs) = run(cfg, &m);
        assert_eq!(flags.iter().position(|&f| f), Some(8));
        assert_eq!(evs[0].onset_sample, 5);
    }

    #[test]
    fn pending_event_cancelled_by_drop() {
        let mut cfg = DetectorConfig::fixed(100, 50);
        cfg.activation_delay = 5;
        let m = [0, 200, 200, 10, 10, 10, 10, 10, 10];
        let (flags, evs) = run(cfg, &m);
        assert!(flags.iter().all(|&f| !f));
        assert!(evs.is_empty());
    }

    #[test]
    fn off_must_be_below_on() {
        assert!(Detector::new(0, DetectorConfig::fixed(100, 100)).is_err());
    }

    #[test]
    fn zero_input_never_detects() {
        let (flags, _) = run(DetectorConfig::adaptive(100), &vec![0; 5000]);
        assert!(flags.iter().all(|&f| !f));
        let (flags, _) = run(DetectorConfig::fixed(1, 0), &[0; 100]);
        assert!(flags.iter().all(|&f| !f));
    }

    #[test]
    fn adaptive_baseline_tracks_and_freezes() {
        let cfg = DetectorConfig::adaptive(100);
        let mut d = Detector::new(0, cfg).unwrap();
        for n in 0..3000 {
            d.tick(Some(100), n);
        }
        assert_eq!(d.thresholds(), (300, 200));
        let mut asserted = None;
        for n in 3000..3100 {
            if d.tick(Some(400), n).detected && asserted.is_none() {
                asserted = Some(n);
            }
        }
        assert_eq!(asserted, Some(3000));
        // baseline frozen while active
        assert_eq!(d.thresholds(), (300, 200));
    }

    #[test]
    fn rejects_inverted_thresholds() {
        assert!(Detector::new(0, DetectorConfig::fixed(10, 20)).is_err());
    }

    #[test]
    fn events_csv() {
        let e = OscillationEvent {
            band_id: 2,
            onset_sample: 10,
            asserted_sample: 12,
            offset_sample: None,
            peak_magnitude: 900,
        };
        let mut buf = vec![];
        write_events_csv(&[e], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "band_id,onset_sample,asserted_sample,offset_sample,peak_magnitude\n2,10,12,,900\n"
        );
    }
}
