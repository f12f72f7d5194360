//! Phase- and delay-locked stimulation triggers with a per-arming pulse
//! quota and time window.

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::calibration::CorrectedEstimate;
use crate::error::{Error, Result};
use crate::estimator::{Crossing, TURN_MDEG};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum TriggerMode {
    /// Fire when the (corrected) phase passes `target_mdeg`.
    Phase { target_mdeg: u32 },
    /// Fire `delay_samples` after each rising zero-crossing.
    DelayAfterRising { delay_samples: u32 },
    /// Fire `delay_samples` after each falling zero-crossing.
    DelayAfterFalling { delay_samples: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RearmPolicy {
    /// Quota and window are set once at `arm_sample`.
    #[default]
    Manual,
    /// Every detection onset re-arms the trigger.
    OnEvent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerSpec {
    pub spec_id: u32,
    pub band_id: u32,
    pub mode: TriggerMode,
    pub max_pulses: u32,
    pub window_samples: u64,
    #[serde(default)]
    pub arm_sample: i64,
    #[serde(default)]
    pub rearm: RearmPolicy,
}

impl TriggerSpec {
    pub fn validate(&self) -> Result<()> {
        if let TriggerMode::Phase { target_mdeg } = self.mode {
            if target_mdeg as i64 >= TURN_MDEG {
                return Err(Error::config(format!(
                    "trigger {}: phase target {target_mdeg} mdeg is not below 360000",
                    self.spec_id
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerEvent {
    pub fire_sample: i64,
    pub band_id: u32,
    pub spec_id: u32,
    /// Phase the trigger compared against at the moment it fired.
    pub achieved_phase_mdeg: u32,
    /// Zero-crossing the pulse was scheduled from, in delay modes.
    pub anchor_zc: Option<i64>,
    /// The phase jumped by more than one and a half sample steps; the
    /// target may have been skipped over rather than approached.
    pub jumped: bool,
}

#[derive(Debug, Clone)]
pub struct Trigger {
    spec: TriggerSpec,
    armed_at: i64,
    pulses: u32,
    prev_phase: Option<u32>,
    pending: VecDeque<(i64, i64)>,
}

fn wrap_signed(d: i64) -> i64 {
    let w = d.rem_euclid(TURN_MDEG);
    if w > TURN_MDEG / 2 {
        w - TURN_MDEG
    } else {
        w
    }
}

impl Trigger {
    pub fn new(spec: TriggerSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            armed_at: spec.arm_sample,
            spec,
            pulses: 0,
            prev_phase: None,
            pending: VecDeque::new(),
        })
    }

    pub fn spec(&self) -> &TriggerSpec {
        &self.spec
    }

    pub fn pulses_used(&self) -> u32 {
        self.pulses
    }

    /// Restarts the quota and window at sample `n`.
    pub fn rearm(&mut self, n: i64) {
        self.armed_at = n;
        self.pulses = 0;
    }

    pub fn reset(&mut self) {
        *self = Self::new(self.spec).expect("spec validated at construction");
    }

    /// Whether a pulse at `n` is allowed by the quota and window.
    pub fn gate_open(&self, n: i64) -> bool {
        self.pulses < self.spec.max_pulses
            && n >= self.armed_at
            && ((n - self.armed_at) as u64) < self.spec.window_samples
    }

    /// Advances one sample. `detected` is the band's detection flag.
    pub fn tick(&mut self, est: &CorrectedEstimate, detected: bool, n: i64) -> Option<TriggerEvent> {
        let fire = match self.spec.mode {
            TriggerMode::Phase { target_mdeg } => self.phase_tick(est, target_mdeg),
            TriggerMode::DelayAfterRising { delay_samples } => {
                self.delay_tick(est, Crossing::Rising, delay_samples, n)
            }
            TriggerMode::DelayAfterFalling { delay_samples } => {
                self.delay_tick(est, Crossing::Falling, delay_samples, n)
            }
        };
        let (anchor_zc, jumped) = fire?;
        if !detected || !self.gate_open(n) {
            return None;
        }
        self.pulses += 1;
        Some(TriggerEvent {
            fire_sample: n,
            band_id: self.spec.band_id,
            spec_id: self.spec.spec_id,
            achieved_phase_mdeg: est.phase_mdeg,
            anchor_zc,
            jumped,
        })
    }

    fn phase_tick(&mut self, est: &CorrectedEstimate, target: u32) -> Option<(Option<i64>, bool)> {
        if !est.raw.valid {
            self.prev_phase = None;
            return None;
        }
        let cur = est.phase_mdeg;
        let prev = self.prev_phase.replace(cur)?;
        let step = wrap_signed(cur as i64 - prev as i64);
        if step <= 0 {
            // standing still or a backward jump at a crossing
            return None;
        }
        let to_target = (target as i64 - prev as i64).rem_euclid(TURN_MDEG);
        if to_target == 0 || to_target > step {
            return None;
        }
        let nominal = TURN_MDEG / est.raw.period_samples.max(1) as i64;
        Some((None, 2 * step > 3 * nominal))
    }

    fn delay_tick(
        &mut self,
        est: &CorrectedEstimate,
        polarity: Crossing,
        delay: u32,
        n: i64,
    ) -> Option<(Option<i64>, bool)> {
        if est.raw.crossing == Some(polarity) && est.raw.valid {
            let zc16 = match polarity {
                Crossing::Rising => est.rising_zc_sixteenths,
                Crossing::Falling => est.falling_zc_sixteenths,
            }
            .unwrap_or(n * 16);
            // round the compensated crossing to the nearest sample
            let zc = (zc16 + 8).div_euclid(16);
            let mut at = zc + delay as i64;
            if at < n {
                let p = est.raw.period_samples.max(1) as i64;
                at += (n - at + p - 1) / p * p;
            }
            self.pending.push_back((at, zc));
        }
        let mut fired = None;
        while let Some(&(at, zc)) = self.pending.front() {
            if at > n {
                break;
            }
            self.pending.pop_front();
            if at == n && fired.is_none() {
                fired = Some((Some(zc), false));
            }
        }
        fired
    }
}

/// Writes pulses as `fire_sample,band_id,spec_id,achieved_phase_mdeg,anchor_zc,jumped`.
pub fn write_pulses_csv<W: Write>(pulses: &[TriggerEvent], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["fire_sample", "band_id", "spec_id", "achieved_phase_mdeg", "anchor_zc", "jumped"])?;
    for p in pulses {
        wr.write_record([
            p.fire_sample.to_string(),
            p.band_id.to_string(),
            p.spec_id.to_string(),
            p.achieved_phase_mdeg.to_string(),
            p.anchor_zc.map(|v| v.to_string()).unwrap_or_default(),
            p.jumped.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::FeatureEstimate;

    fn spec(mode: TriggerMode) -> TriggerSpec {
        TriggerSpec {
            spec_id: 0,
            band_id: 0,
            mode,
            max_pulses: u32::MAX,
            window_samples: u64::MAX,
            arm_sample: 0,
            rearm: RearmPolicy::Manual,
        }
    }

    /// Ideal estimate of a tone with `period` samples, rising crossings at
    /// multiples of the period.
    fn ideal(n: i64, period: u32) -> CorrectedEstimate {
        let p = period as i64;
        let k = n.rem_euclid(p);
        let rising = n - k;
        let half = p / 2;
        let crossing = if k == 0 {
            Some(Crossing::Rising)
        } else if k == half {
            Some(Crossing::Falling)
        } else {
            None
        };
        let falling = if k >= half { n - k + half } else { n - k - half };
        let raw = FeatureEstimate {
            n,
            magnitude: 1000,
            period_samples: period,
            phase_mdeg: (TURN_MDEG * k / p) as u32,
            last_rising_zc: Some(rising),
            last_falling_zc: Some(falling),
            crossing,
            valid: true,
        };
        CorrectedEstimate::uncorrected(raw)
    }

    fn run(t: &mut Trigger, samples: i64, period: u32, detected: impl Fn(i64) -> bool) -> Vec<TriggerEvent> {
        (0..samples)
            .filter_map(|n| t.tick(&ideal(n, period), detected(n), n))
            .collect()
    }

    #[test]
    fn phase_target_fires_once_per_cycle() {
        let mut t = Trigger::new(spec(TriggerMode::Phase { target_mdeg: 90_000 })).unwrap();
        let ev = run(&mut t, 500, 50, |_| true);
        assert_eq!(ev.len(), 10);
        for e in &ev {
            assert_eq!(e.fire_sample.rem_euclid(50), 12 + 1);
            assert!(!e.jumped);
        }
    }

    #[test]
    fn delay_after_rising() {
        let mut t = Trigger::new(spec(TriggerMode::DelayAfterRising { delay_samples: 10 })).unwrap();
        let ev = run(&mut t, 300, 50, |_| true);
        let fires: Vec<i64> = ev.iter().map(|e| e.fire_sample).collect();
        assert_eq!(fires, [10, 60, 110, 160, 210, 260]);
        assert_eq!(ev[1].anchor_zc, Some(50));
    }

    #[test]
    fn delay_longer_than_period_queues() {
        let mut t = Trigger::new(spec(TriggerMode::DelayAfterFalling { delay_samples: 70 })).unwrap();
        let ev = run(&mut t, 300, 50, |_| true);
        let fires: Vec<i64> = ev.iter().map(|e| e.fire_sample).collect();
        assert_eq!(fires, [95, 145, 195, 245, 295]);
    }

    #[test]
    fn past_instant_reschedules_one_period_later() {
        // the compensated crossing is 20 samples in the past
        let mut s = ideal(100, 50);
        s.rising_zc_sixteenths = Some(80 * 16);
        let mut t = Trigger::new(spec(TriggerMode::DelayAfterRising { delay_samples: 5 })).unwrap();
        assert!(t.tick(&s, true, 100).is_none());
        let mut fired = None;
        for n in 101..200 {
            if let Some(e) = t.tick(&ideal(n, 50), true, n) {
                fired = Some(e.fire_sample);
                break;
            }
        }
        assert_eq!(fired, Some(135));
    }

    #[test]
    fn quota_and_window() {
        let mut s = spec(TriggerMode::Phase { target_mdeg: 0 });
        s.max_pulses = 2;
        let mut t = Trigger::new(s).unwrap();
        assert_eq!(run(&mut t, 1000, 50, |_| true).len(), 2);

        let mut s = spec(TriggerMode::Phase { target_mdeg: 0 });
        s.window_samples = 0;
        let mut t = Trigger::new(s).unwrap();
        assert!(run(&mut t, 1000, 50, |_| true).is_empty());

        let mut s = spec(TriggerMode::Phase { target_mdeg: 180_000 });
        s.arm_sample = 100;
        s.window_samples = 200;
        let mut t = Trigger::new(s).unwrap();
        let ev = run(&mut t, 1000, 50, |_| true);
        assert!(ev.iter().all(|e| (100..300).contains(&e.fire_sample)));
        assert_eq!(ev.len(), 4);
    }

    #[test]
    fn silent_without_detection() {
        let mut t = Trigger::new(spec(TriggerMode::Phase { target_mdeg: 0 })).unwrap();
        assert!(run(&mut t, 1000, 50, |_| false).is_empty());
        let mut t = Trigger::new(spec(TriggerMode::DelayAfterRising { delay_samples: 3 })).unwrap();
        assert!(run(&mut t, 1000, 50, |_| false).is_empty());
    }

    #[test]
    fn quota_per_arming() {
        let mut s = spec(TriggerMode::Phase { target_mdeg: 0 });
        s.max_pulses = 2;
        s.rearm = RearmPolicy::OnEvent;
        let mut t = Trigger::new(s).unwrap();
        let mut count = 0;
        for n in 0..1000 {
            if n == 500 {
                t.rearm(n);
            }
            count += t.tick(&ideal(n, 50), true, n).is_some() as u32;
        }
        assert_eq!(count, 4);
    }

    #[test]
    fn backward_jump_does_not_fire_forward_jump_is_flagged() {
        let mut t = Trigger::new(spec(TriggerMode::Phase { target_mdeg: 100_000 })).unwrap();
        let mut e = ideal(10, 50);
        e.raw.phase_mdeg = 120_000;
        e.phase_mdeg = 120_000;
        t.tick(&e, true, 10);
        e.phase_mdeg = 80_000;
        assert!(t.tick(&e, true, 11).is_none());
        e.phase_mdeg = 110_000;
        let ev = t.tick(&e, true, 12).unwrap();
        assert!(ev.jumped);
    }

    #[test]
    fn rejects_bad_target() {
        assert!(Trigger::new(spec(TriggerMode::Phase { target_mdeg: 360_000 })).is_err());
    }
}
