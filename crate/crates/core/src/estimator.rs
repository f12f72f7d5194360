//! Peak/trough/zero-crossing estimation of magnitude, period and phase.
//!
//! Phase follows the sine convention: 0° at a rising zero-crossing, 90° at
//! the peak, 180° at a falling crossing. Between crossings the phase runs
//! forward at 360°/period from the last crossing.

use serde::{Deserialize, Serialize};

use crate::signal::SampleQ14;

/// Millidegrees in a full turn.
pub const TURN_MDEG: i64 = 360_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Crossing {
    Rising,
    Falling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    /// Sign changes closer than this many samples to the last accepted
    /// crossing are ignored.
    pub min_crossing_gap: u32,
    /// Treat a crossing as having happened half a sample before the first
    /// sample of the new sign, removing the average half-sample lag of
    /// integer crossing localization.
    pub half_sample_anchor: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            min_crossing_gap: 2,
            half_sample_anchor: true,
        }
    }
}

/// Running feature estimate for one band at one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureEstimate {
    pub n: i64,
    /// Absolute extremum of the last completed half-wave.
    pub magnitude: SampleQ14,
    /// Twice the latest half-period, in samples.
    pub period_samples: u32,
    /// Phase in millidegrees, `0..360_000`.
    pub phase_mdeg: u32,
    pub last_rising_zc: Option<i64>,
    pub last_falling_zc: Option<i64>,
    /// Crossing detected at this very sample, if any.
    pub crossing: Option<Crossing>,
    pub valid: bool,
}

#[derive(Debug, Clone)]
pub struct ZeroCrossingEstimator {
    cfg: EstimatorConfig,
    sign: i8,
    last_zc: Option<i64>,
    anchor_mdeg: i64,
    crossings: u32,
    extremum: SampleQ14,
    est: FeatureEstimate,
    macs: u64,
}

impl ZeroCrossingEstimator {
    pub fn new(cfg: EstimatorConfig) -> Self {
        Self {
            cfg,
            sign: 0,
            last_zc: None,
            anchor_mdeg: 0,
            crossings: 0,
            extremum: 0,
            est: FeatureEstimate::default(),
            macs: 0,
        }
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.cfg
    }

    pub fn estimate(&self) -> &FeatureEstimate {
        &self.est
    }

    pub fn macs(&self) -> u64 {
        self.macs
    }

    pub fn reset(&mut self) {
        *self = Self::new(self.cfg);
    }

    /// Consumes one band-pass sample at index `n`.
    pub fn tick(&mut self, x: SampleQ14, n: i64) -> FeatureEstimate {
        let s = x.signum() as i8;
        self.est.n = n;
        self.est.crossing = None;
        if self.sign == 0 {
            // no reference sign yet; zeros do not establish one
            self.sign = s;
            self.extremum = x.abs();
        } else if s != 0 && s != self.sign {
            let gap_ok = self
                .last_zc
                .is_none_or(|z| n - z >= self.cfg.min_crossing_gap as i64);
            if gap_ok {
                self.commit_crossing(s, n);
                self.extremum = x.abs();
            }
        } else {
            self.extremum = self.extremum.max(x.abs());
        }
        self.update_phase(n);
        self.est
    }

    fn commit_crossing(&mut self, s: i8, n: i64) {
        if let Some(z) = self.last_zc {
            let half = (n - z).clamp(1, u32::MAX as i64 / 2) as u32;
            self.est.period_samples = 2 * half;
            self.est.magnitude = self.extremum;
        }
        self.crossings = self.crossings.saturating_add(1);
        self.sign = s;
        self.last_zc = Some(n);
        let kind = if s > 0 {
            self.est.last_rising_zc = Some(n);
            self.anchor_mdeg = 0;
            Crossing::Rising
        } else {
            self.est.last_falling_zc = Some(n);
            self.anchor_mdeg = TURN_MDEG / 2;
            Crossing::Falling
        };
        self.est.crossing = Some(kind);
        self.est.valid = self.crossings >= 2;
    }

    fn update_phase(&mut self, n: i64) {
        let (Some(z), true) = (self.last_zc, self.est.period_samples > 0) else {
            return;
        };
        // elapsed time since the crossing, in half samples
        let half_steps = 2 * (n - z) + self.cfg.half_sample_anchor as i64;
        let p = self.est.period_samples as i64;
        let advance = (TURN_MDEG / 2 * half_steps + p / 2) / p;
        self.macs += 1;
        self.est.phase_mdeg = (self.anchor_mdeg + advance).rem_euclid(TURN_MDEG) as u32;
    }
}

/// Exponentially smoothed winner-take-all over a dense bank.
#[derive(Debug, Clone)]
pub struct WinnerState {
    smoothed: Vec<i64>,
    tau: i64,
    winner: usize,
    macs: u64,
}

/// Fixed-point scale of the smoothed magnitudes.
const WINNER_Q: u32 = 16;

impl WinnerState {
    /// `tau_samples` is the smoothing time constant (one period of the
    /// bank's center band by default).
    pub fn new(bands: usize, tau_samples: u32) -> Self {
        Self {
            smoothed: vec![0; bands],
            tau: tau_samples.max(1) as i64,
            winner: 0,
            macs: 0,
        }
    }

    pub fn smoothed(&self) -> &[i64] {
        &self.smoothed
    }

    pub fn winner(&self) -> usize {
        self.winner
    }

    pub fn macs(&self) -> u64 {
        self.macs
    }

    pub fn reset(&mut self) {
        self.smoothed.iter_mut().for_each(|s| *s = 0);
        self.winner = 0;
    }

    /// Updates the smoothed magnitudes and returns the index (in band-id
    /// order) of the strongest band; ties go to the lowest index.
    pub fn tick(&mut self, magnitudes: &[SampleQ14]) -> usize {
        debug_assert_eq!(magnitudes.len(), self.smoothed.len());
        for (s, &m) in self.smoothed.iter_mut().zip(magnitudes) {
            let target = (m as i64) << WINNER_Q;
            *s += (target - *s + self.tau / 2).div_euclid(self.tau);
        }
        self.macs += magnitudes.len() as u64;
        let mut best = 0;
        for (i, &s) in self.smoothed.iter().enumerate() {
            if s > self.smoothed[best] {
                best = i;
            }
        }
        self.winner = best;
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine(f: f64, rate: f64, amp: f64, n: usize) -> Vec<i32> {
        (0..n)
            .map(|k| (amp * (2.0 * PI * f * k as f64 / rate).sin()).round() as i32)
            .collect()
    }

    fn exact_cfg() -> EstimatorConfig {
        EstimatorConfig {
            half_sample_anchor: false,
            ..Default::default()
        }
    }

    #[test]
    fn pure_sine_period_magnitude_and_phase() {
        // offset by half a sample so every peak lands on a sample
        let x: Vec<i32> = (0..2000)
            .map(|k| (3000.0 * (2.0 * PI * (k as f64 + 0.5) / 50.0).sin()).round() as i32)
            .collect();
        let mut e = ZeroCrossingEstimator::new(exact_cfg());
        let mut rising = 0;
        for (n, &v) in x.iter().enumerate() {
            let est = e.tick(v, n as i64);
            if n > 200 {
                assert!(est.valid);
                assert_eq!(est.period_samples, 50);
                assert!((est.magnitude - 3000).abs() <= 1);
                if est.crossing == Some(Crossing::Rising) {
                    assert_eq!(est.phase_mdeg, 0);
                    rising += 1;
                }
            }
        }
        assert!(rising >= 30);
    }

    #[test]
    fn square_wave_plateau() {
        // 25 Hz at 500 sps: 10 samples high, 10 low
        let x: Vec<i32> = (0..400).map(|n| if (n / 10) % 2 == 0 { 1234 } else { -1234 }).collect();
        let mut e = ZeroCrossingEstimator::new(exact_cfg());
        let est = x.iter().enumerate().map(|(n, &v)| e.tick(v, n as i64)).last().unwrap();
        assert_eq!(est.period_samples, 20);
        assert_eq!(est.magnitude, 1234);
    }

    #[test]
    fn invalid_until_two_crossings() {
        let mut e = ZeroCrossingEstimator::new(exact_cfg());
        assert!(!e.tick(5, 0).valid);
        assert!(!e.tick(-5, 3).valid); // first crossing
        assert!(!e.tick(-5, 4).valid);
        assert!(e.tick(5, 8).valid); // second crossing
        assert_eq!(e.estimate().period_samples, 10);
    }

    #[test]
    fn zeros_keep_previous_sign() {
        let mut e = ZeroCrossingEstimator::new(exact_cfg());
        for (n, v) in [3, 0, 0, 2, 0, -4, 0, -1, 0, 6].into_iter().enumerate() {
            e.tick(v, n as i64);
        }
        assert_eq!(e.estimate().last_falling_zc, Some(5));
        assert_eq!(e.estimate().last_rising_zc, Some(9));
        assert_eq!(e.estimate().period_samples, 8);
    }

    #[test]
    fn glitch_guard_ignores_fast_flips() {
        let mut e = ZeroCrossingEstimator::new(EstimatorConfig {
            min_crossing_gap: 3,
            half_sample_anchor: false,
        });
        let x = [5, 5, -5, 5, 5, 5, 5, 5, -5, -5];
        let mut periods = vec![];
        for (n, &v) in x.iter().enumerate() {
            periods.push(e.tick(v, n as i64).period_samples);
        }
        // flips at n=3 and n=4 are too close to the crossing at n=2
        assert_eq!(e.estimate().last_rising_zc, Some(5));
        assert_eq!(e.estimate().last_falling_zc, Some(8));
        assert!(periods.iter().all(|&p| p == 0 || p >= 6));
    }

    #[test]
    fn phase_advances_linearly_between_crossings() {
        let x = sine(10.0, 500.0, 3000.0, 600);
        let mut e = ZeroCrossingEstimator::new(exact_cfg());
        let ests: Vec<_> = x.iter().enumerate().map(|(n, &v)| e.tick(v, n as i64)).collect();
        for w in ests[200..].windows(2) {
            if w[1].crossing.is_none() {
                let d = (w[1].phase_mdeg as i64 - w[0].phase_mdeg as i64).rem_euclid(TURN_MDEG);
                assert_eq!(d, 7200);
            }
        }
    }

    #[test]
    fn half_period_quantization() {
        // 17 Hz at 500 sps: half-period 14.7 samples
        let x = sine(17.0, 500.0, 2000.0, 3000);
        let mut e = ZeroCrossingEstimator::new(EstimatorConfig::default());
        for (n, &v) in x.iter().enumerate() {
            let est = e.tick(v, n as i64);
            if n > 100 {
                assert!(est.period_samples == 28 || est.period_samples == 30);
            }
        }
    }

    #[test]
    fn half_sample_anchor_offsets_crossing_phase() {
        let x = sine(10.0, 500.0, 3000.0, 400);
        let mut e = ZeroCrossingEstimator::new(EstimatorConfig::default());
        for (n, &v) in x.iter().enumerate() {
            let est = e.tick(v, n as i64);
            if n > 100 && est.crossing == Some(Crossing::Rising) {
                assert_eq!(est.phase_mdeg, 3600);
            }
        }
    }

    #[test]
    fn winner_single_band_and_ties() {
        let mut w = WinnerState::new(1, 25);
        assert_eq!(w.tick(&[100]), 0);
        let mut w = WinnerState::new(3, 25);
        for _ in 0..10 {
            assert_eq!(w.tick(&[7, 7, 7]), 0);
        }
        assert_eq!(w.tick(&[0, 0, 0]), 0);
        let mut w = WinnerState::new(3, 4);
        for _ in 0..20 {
            w.tick(&[1, 900, 300]);
        }
        assert_eq!(w.winner(), 1);
    }
}
