use std::f64::consts::PI;

use num_complex::Complex64;

use super::RealBiquad;

/// `H(e^{jω})` of one stage; `omega` in radians per sample.
pub fn biquad_response(stage: &RealBiquad, omega: f64) -> Complex64 {
    let z1 = Complex64::from_polar(1.0, -omega);
    let z2 = z1 * z1;
    let num = stage.b[0] + z1 * stage.b[1] + z2 * stage.b[2];
    let den = stage.a[0] + z1 * stage.a[1] + z2 * stage.a[2];
    num / den
}

pub fn cascade_response(stages: &[RealBiquad], omega: f64) -> Complex64 {
    stages
        .iter()
        .map(|s| biquad_response(s, omega))
        .product()
}

pub fn fir_response(taps: &[f64], omega: f64) -> Complex64 {
    let step = Complex64::from_polar(1.0, -omega);
    let mut z = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for &t in taps {
        acc += z * t;
        z *= step;
    }
    acc
}

/// Unwraps a phase sequence in place so successive values differ by < π.
pub fn unwrap_phase(phase: &mut [f64]) {
    for k in 1..phase.len() {
        let d = phase[k] - phase[k - 1];
        let wraps = ((d + PI) / (2.0 * PI)).floor();
        phase[k] -= wraps * 2.0 * PI;
    }
}

/// Shifts an unwrapped phase curve by whole turns so that it is `<= 0`
/// everywhere, making `-φ/ω` a non-negative delay on the whole grid.
pub fn phase_delay_branch(phase: &mut [f64]) {
    let max = phase.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max > 0.0 {
        let turns = (max / (2.0 * PI)).ceil();
        for p in phase.iter_mut() {
            *p -= turns * 2.0 * PI;
        }
    }
}
