use std::f64::consts::PI;

use super::{fir_response, FilterFamily, FilterKind, FilterSpec};
use crate::error::{Error, Result};

/// Hamming-windowed sinc taps. Tap count must be odd so the group delay
/// `(N - 1) / 2` is a whole number of samples.
///
/// For low-pass filters the sinc cutoff is moved so the -3 dB point lands
/// on the requested corner; band-pass edges are used as given.
pub fn design_fir(spec: &FilterSpec) -> Result<Vec<f64>> {
    if spec.family != FilterFamily::FirWindowed {
        return Err(Error::design("design_fir needs a fir-windowed spec"));
    }
    spec.validate()?;
    let n = spec.order;
    if n.is_multiple_of(2) {
        return Err(Error::design(format!(
            "FIR tap count must be odd, got {n}"
        )));
    }
    if spec.kind == FilterKind::LowPass && n > 1 {
        let fc = spec.corners_hz[0];
        let nyq = spec.rate_sps as f64 / 2.0;
        let target = std::f64::consts::FRAC_1_SQRT_2;
        let gain_at_corner = |cut: f64| -> Result<f64> {
            let taps = windowed_sinc(&FilterSpec { corners_hz: vec![cut], ..spec.clone() })?;
            Ok(fir_response(&taps, 2.0 * PI * fc / spec.rate_sps as f64).norm())
        };
        if gain_at_corner(fc)? < target && gain_at_corner(nyq * 0.999)? > target {
            let (mut lo, mut hi) = (fc, nyq * 0.999);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if gain_at_corner(mid)? < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return windowed_sinc(&FilterSpec { corners_hz: vec![0.5 * (lo + hi)], ..spec.clone() });
        }
    }
    windowed_sinc(spec)
}

fn windowed_sinc(spec: &FilterSpec) -> Result<Vec<f64>> {
    let n = spec.order;
    let fs = spec.rate_sps as f64;
    let mid = (n / 2) as i64;
    let lowpass = |fc: f64, m: i64| {
        let w = 2.0 * fc / fs;
        if m == 0 {
            w
        } else {
            let x = PI * m as f64;
            (w * x).sin() / x
        }
    };
    let mut taps: Vec<f64> = (0..n)
        .map(|k| {
            let m = k as i64 - mid;
            let window = if n == 1 {
                1.0
            } else {
                0.54 - 0.46 * (2.0 * PI * k as f64 / (n - 1) as f64).cos()
            };
            let ideal = match spec.kind {
                FilterKind::LowPass => lowpass(spec.corners_hz[0], m),
                FilterKind::BandPass => {
                    lowpass(spec.corners_hz[1], m) - lowpass(spec.corners_hz[0], m)
                }
            };
            window * ideal
        })
        .collect();
    let omega = 2.0 * PI * spec.reference_hz() / fs;
    let g = fir_response(&taps, omega).norm();
    if g <= 0.0 {
        return Err(Error::design("FIR has zero gain at its reference frequency"));
    }
    for t in &mut taps {
        *t /= g;
    }
    // exact palindrome regardless of floating-point asymmetry in the window
    for k in 0..n / 2 {
        let v = 0.5 * (taps[k] + taps[n - 1 - k]);
        taps[k] = v;
        taps[n - 1 - k] = v;
    }
    Ok(taps)
}
