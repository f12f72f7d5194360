//! Thin wrappers over a scalar FFT planner. The scalar planner gives the
//! same floating-point results on every x86/ARM build, which keeps the
//! synthetic generator reproducible.

use num_complex::Complex64;
use rustfft::FftPlannerScalar;

pub fn forward(buf: &mut [Complex64]) {
    FftPlannerScalar::new().plan_fft_forward(buf.len()).process(buf);
}

/// Inverse transform including the `1/N` normalization.
pub fn inverse(buf: &mut [Complex64]) {
    FftPlannerScalar::new().plan_fft_inverse(buf.len()).process(buf);
    let scale = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
}

pub fn real_spectrum(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward(&mut buf);
    buf
}

/// Frequency in cycles per sample of bin `k` in an `n`-point transform,
/// folded to `0..=0.5`.
pub fn bin_freq(k: usize, n: usize) -> f64 {
    let k = if k <= n / 2 { k } else { n - k };
    k as f64 / n as f64
}

/// Applies a real, even gain `g(f)` (f in cycles per sample) to `x`.
pub fn apply_real_gain(x: &[f64], g: impl Fn(f64) -> f64) -> Vec<f64> {
    let n = x.len();
    let mut buf = real_spectrum(x);
    for (k, v) in buf.iter_mut().enumerate() {
        *v *= g(bin_freq(k, n));
    }
    inverse(&mut buf);
    buf.into_iter().map(|v| v.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let x: Vec<f64> = (0..30).map(|k| (k as f64 * 0.37).sin() + 0.1 * k as f64).collect();
        let y = apply_real_gain(&x, |_| 1.0);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn folded_bins() {
        assert_eq!(bin_freq(0, 8), 0.0);
        assert_eq!(bin_freq(4, 8), 0.5);
        assert_eq!(bin_freq(7, 8), 0.125);
    }
}
