//! Butterworth biquad cascades via the bilinear transform with pre-warped
//! corners.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{FilterFamily, FilterKind, FilterSpec, RealBiquad};
use crate::error::{Error, Result};

/// Designs a real-coefficient Butterworth cascade.
///
/// Low-pass: `order` stages give a 2·`order` pole prototype (two stages is
/// fourth-order roll-off). Band-pass: `order` stages come from an
/// `order`-pole low-pass prototype, so each band edge rolls off at
/// `order`-th order. Every stage is normalized to unit gain at the
/// reference frequency (DC, or the warped band center), so the cascade
/// peaks at 0 dB.
pub fn design_butterworth(spec: &FilterSpec) -> Result<Vec<RealBiquad>> {
    if spec.family != FilterFamily::IirButterworth {
        return Err(Error::design("design_butterworth needs an iir-butterworth spec"));
    }
    spec.validate()?;
    let fs = spec.rate_sps as f64;
    let warp = |f: f64| 2.0 * fs * (PI * f / fs).tan();

    let mut stages = match spec.kind {
        FilterKind::LowPass => {
            let wc = warp(spec.corners_hz[0]);
            let n = 2 * spec.order;
            prototype_pairs(n)
                .into_iter()
                .map(|p| {
                    let z = bilinear(p * wc, fs);
                    normalize(
                        RealBiquad {
                            b: [1.0, 2.0, 1.0],
                            a: [1.0, -2.0 * z.re, z.norm_sqr()],
                        },
                        0.0,
                    )
                })
                .collect::<Vec<_>>()
        }
        FilterKind::BandPass => {
            let w1 = warp(spec.corners_hz[0]);
            let w2 = warp(spec.corners_hz[1]);
            let bw = w2 - w1;
            let w0sq = w1 * w2;
            // digital frequency that the analog center maps to
            let omega0 = 2.0 * (w0sq.sqrt() / (2.0 * fs)).atan();
            let n = spec.order;
            let mut poles = Vec::with_capacity(n);
            for p in prototype_upper(n) {
                // s^2 - p*bw*s + w0^2 = 0
                let pb = p * bw;
                let disc = (pb * pb - 4.0 * w0sq).sqrt();
                let s1 = (pb + disc) / 2.0;
                let s2 = (pb - disc) / 2.0;
                if p.im.abs() < 1e-12 {
                    // real prototype pole: its two band-pass poles are conjugates
                    poles.push(if s1.im >= 0.0 { s1 } else { s2 });
                } else {
                    poles.push(if s1.im >= 0.0 { s1 } else { s1.conj() });
                    poles.push(if s2.im >= 0.0 { s2 } else { s2.conj() });
                }
            }
            poles
                .into_iter()
                .map(|s| {
                    let z = bilinear(s, fs);
                    normalize(
                        RealBiquad {
                            b: [1.0, 0.0, -1.0],
                            a: [1.0, -2.0 * z.re, z.norm_sqr()],
                        },
                        omega0,
                    )
                })
                .collect()
        }
    };
    stages.sort_by(|x, y| pole_angle(x).total_cmp(&pole_angle(y)));
    Ok(stages)
}

/// Upper-half-plane (and real) poles of an `n`-pole unit Butterworth prototype.
fn prototype_upper(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| Complex64::from_polar(1.0, PI * (2 * k + n + 1) as f64 / (2 * n) as f64))
        .filter(|p| p.im >= -1e-12)
        .collect()
}

/// For even `n`, one representative per conjugate pair.
fn prototype_pairs(n: usize) -> Vec<Complex64> {
    debug_assert!(n.is_multiple_of(2));
    prototype_upper(n)
}

fn bilinear(s: Complex64, fs: f64) -> Complex64 {
    (2.0 * fs + s) / (2.0 * fs - s)
}

fn normalize(mut stage: RealBiquad, omega: f64) -> RealBiquad {
    let g = super::biquad_response(&stage, omega).norm();
    for b in &mut stage.b {
        *b /= g;
    }
    stage
}

fn pole_angle(s: &RealBiquad) -> f64 {
    let disc = 4.0 * s.a[2] - s.a[1] * s.a[1];
    if disc <= 0.0 {
        0.0
    } else {
        disc.sqrt().atan2(-s.a[1])
    }
}
