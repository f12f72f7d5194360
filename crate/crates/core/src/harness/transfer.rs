use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::design::{phase_delay_branch, unwrap_phase};
use crate::fft;

/// Cross-spectral transfer estimate on a log-spaced frequency grid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TransferEstimate {
    pub rate_sps: f64,
    pub freqs_hz: Vec<f64>,
    pub gain: Vec<f64>,
    /// Unwrapped phase in radians, shifted by whole turns to be `<= 0`.
    pub phase_rad: Vec<f64>,
    pub phase_delay_s: Vec<f64>,
    pub group_delay_s: Vec<f64>,
}

impl TransferEstimate {
    /// Linear interpolation of `(phase, gain)` in log frequency, clamped to
    /// the measured range.
    pub fn interpolate(&self, f_hz: f64) -> Option<(f64, f64)> {
        let f = &self.freqs_hz;
        if f.is_empty() {
            return None;
        }
        if f_hz <= f[0] {
            return Some((self.phase_rad[0], self.gain[0]));
        }
        let last = f.len() - 1;
        if f_hz >= f[last] {
            return Some((self.phase_rad[last], self.gain[last]));
        }
        let i = f.partition_point(|&v| v <= f_hz) - 1;
        let t = (f_hz.ln() - f[i].ln()) / (f[i + 1].ln() - f[i].ln());
        let lerp = |v: &[f64]| v[i] + t * (v[i + 1] - v[i]);
        Some((lerp(&self.phase_rad), lerp(&self.gain)))
    }

    /// Phase delay in seconds at `f_hz`.
    pub fn phase_delay_at(&self, f_hz: f64) -> Option<f64> {
        self.interpolate(f_hz).map(|(p, _)| -p / (2.0 * PI * f_hz))
    }
}

/// Estimates `H = Σ Y X* / Σ |X|²` over `bins_per_octave` log bins between
/// `f_lo_hz` and `f_hi_hz`. Each bin is reported at the power-weighted mean
/// frequency of its FFT lines. Lines whose input magnitude is below
/// `1e-9` of the spectral peak are masked, and bins left with no input
/// power are skipped.
pub fn measure_transfer(
    input: &[f64],
    output: &[f64],
    rate_sps: f64,
    f_lo_hz: f64,
    f_hi_hz: f64,
    bins_per_octave: u32,
) -> TransferEstimate {
    let n = input.len().min(output.len());
    let x = fft::real_spectrum(&input[..n]);
    let y = fft::real_spectrum(&output[..n]);
    let step = 2f64.powf(1.0 / bins_per_octave as f64);
    let half_step = step.sqrt();
    let df = rate_sps / n as f64;
    let floor = x.iter().fold(0.0f64, |a, v| a.max(v.norm())) * 1e-9;

    let mut freqs = vec![];
    let mut h = vec![];
    let mut fc = f_lo_hz;
    while fc <= f_hi_hz * (1.0 + 1e-9) {
        let k_lo = ((fc / half_step) / df).ceil() as usize;
        let k_hi = (((fc * half_step) / df).ceil() as usize).min(n / 2 + 1);
        let mut sxy = Complex64::new(0.0, 0.0);
        let mut sxx = 0.0;
        let mut sfx = 0.0;
        for k in k_lo.max(1)..k_hi {
            if x[k].norm() <= floor {
                continue;
            }
            sxy += y[k] * x[k].conj();
            sxx += x[k].norm_sqr();
            sfx += k as f64 * df * x[k].norm_sqr();
        }
        if sxx > 0.0 {
            // power-weighted line frequency rather than the nominal center
            freqs.push(sfx / sxx);
            h.push(sxy / sxx);
        }
        fc *= step;
    }

    let gain: Vec<f64> = h.iter().map(|v| v.norm()).collect();
    let mut phase: Vec<f64> = h.iter().map(|v| v.arg()).collect();
    unwrap_phase(&mut phase);
    phase_delay_branch(&mut phase);
    let phase_delay_s = freqs
        .iter()
        .zip(&phase)
        .map(|(f, p)| -p / (2.0 * PI * f))
        .collect();
    let mut gd = vec![0.0; freqs.len()];
    for k in 0..freqs.len() {
        let (a, b) = if k + 1 < freqs.len() {
            (k, k + 1)
        } else if k > 0 {
            (k - 1, k)
        } else {
            break;
        };
        gd[k] = -(phase[b] - phase[a]) / (2.0 * PI * (freqs[b] - freqs[a]));
    }
    let group_delay_s = if gd.len() >= 3 {
        crate::harness::analytic::centered_mean(&gd, 3)
    } else {
        gd
    };

    TransferEstimate {
        rate_sps,
        freqs_hz: freqs,
        gain,
        phase_rad: phase,
        phase_delay_s,
        group_delay_s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn pure_delay_is_recovered() {
        let x = noise(8192, 1);
        let d = 7;
        // circular shift so the cross spectrum is exact
        let y: Vec<f64> = (0..x.len()).map(|k| x[(k + x.len() - d) % x.len()]).collect();
        let t = measure_transfer(&x, &y, 500.0, 4.0, 100.0, 24);
        assert!(!t.freqs_hz.is_empty());
        for (k, f) in t.freqs_hz.iter().enumerate() {
            assert!((t.gain[k] - 1.0).abs() < 0.05, "gain at {f}: {}", t.gain[k]);
            assert!((t.phase_delay_s[k] - d as f64 / 500.0).abs() < 1e-3, "pd at {f}");
            assert!((t.group_delay_s[k] - d as f64 / 500.0).abs() < 2e-3, "gd at {f}: {}", t.group_delay_s[k]);
        }
    }

    #[test]
    fn silent_band_is_masked() {
        // a pure 20 Hz line leaves every other bin without input power
        let x: Vec<f64> = (0..5000).map(|k| (2.0 * PI * 20.0 * k as f64 / 500.0).sin()).collect();
        let t = measure_transfer(&x, &x, 500.0, 4.0, 100.0, 12);
        assert_eq!(t.freqs_hz.len(), 1);
        assert!((t.freqs_hz[0] - 20.0).abs() < 1e-6);
        assert!((t.gain[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn interpolation_clamps() {
        let x = noise(4096, 2);
        let t = measure_transfer(&x, &x, 500.0, 10.0, 50.0, 12);
        let (p, g) = t.interpolate(1.0).unwrap();
        assert!(p.abs() < 1e-9 && (g - 1.0).abs() < 1e-9);
        assert!(t.interpolate(1e4).is_some());
    }
}
