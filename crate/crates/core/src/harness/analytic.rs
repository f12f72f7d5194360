use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::fft;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalyticSignal {
    pub magnitude: Vec<f64>,
    /// Sine-convention phase in degrees, `0..360`.
    pub phase_deg: Vec<f64>,
    /// Smoothed instantaneous frequency in Hz.
    pub inst_freq_hz: Vec<f64>,
    /// False where the magnitude is zero and the phase means nothing.
    pub defined: Vec<bool>,
}

/// FFT-based analytic signal of `x`. The instantaneous frequency is the
/// phase derivative averaged over a centered window of `smooth_samples`.
pub fn analytic_signal(x: &[f64], rate_sps: f64, smooth_samples: usize) -> AnalyticSignal {
    let n = x.len();
    if n == 0 {
        return AnalyticSignal::default();
    }
    let mut buf = fft::real_spectrum(x);
    for (k, v) in buf.iter_mut().enumerate() {
        let w = if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
            1.0
        } else if k < n.div_ceil(2) {
            2.0
        } else {
            0.0
        };
        *v *= w;
    }
    fft::inverse(&mut buf);

    let magnitude: Vec<f64> = buf.iter().map(|z| z.norm()).collect();
    let peak = magnitude.iter().fold(0.0f64, |a, &b| a.max(b));
    let defined = magnitude.iter().map(|&m| m > peak * 1e-12 && m > 0.0).collect();
    let arg: Vec<f64> = buf.iter().map(|z| z.arg()).collect();
    // x = sin θ has analytic signal -j·e^{jθ}, so θ = arg + 90°
    let phase_deg = arg
        .iter()
        .map(|a| (a.to_degrees() + 90.0).rem_euclid(360.0))
        .collect();

    let mut unwrapped = arg;
    crate::design::unwrap_phase(&mut unwrapped);
    let mut dphi = vec![0.0; n];
    for k in 1..n {
        dphi[k] = unwrapped[k] - unwrapped[k - 1];
    }
    if n > 1 {
        dphi[0] = dphi[1];
    }
    let inst = centered_mean(&dphi, smooth_samples.max(1));
    let inst_freq_hz = inst.iter().map(|d| d * rate_sps / (2.0 * PI)).collect();

    AnalyticSignal {
        magnitude,
        phase_deg,
        inst_freq_hz,
        defined,
    }
}

/// Moving average over a centered window, shrinking at the edges.
pub(crate) fn centered_mean(x: &[f64], width: usize) -> Vec<f64> {
    let half = width / 2;
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    for &v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..x.len())
        .map(|k| {
            let lo = k.saturating_sub(half);
            let hi = (k + half + 1).min(x.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_phase_and_frequency() {
        let rate = 500.0;
        let f = 10.0;
        let x: Vec<f64> = (0..1000)
            .map(|k| 2.0 * (2.0 * PI * f * k as f64 / rate + 0.3).sin())
            .collect();
        let a = analytic_signal(&x, rate, 51);
        for k in 100..900 {
            let expected = ((2.0 * PI * f * k as f64 / rate + 0.3).to_degrees()).rem_euclid(360.0);
            let d = (a.phase_deg[k] - expected + 540.0).rem_euclid(360.0) - 180.0;
            assert!(d.abs() < 1e-6, "k={k} d={d}");
            assert!((a.magnitude[k] - 2.0).abs() < 1e-9);
            assert!((a.inst_freq_hz[k] - f).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_input_has_undefined_phase() {
        let a = analytic_signal(&[0.0; 64], 500.0, 5);
        assert!(a.magnitude.iter().all(|&m| m == 0.0));
        assert!(a.defined.iter().all(|&d| !d));
    }

    #[test]
    fn empty_input() {
        assert!(analytic_signal(&[], 500.0, 5).phase_deg.is_empty());
    }
}
