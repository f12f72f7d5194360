use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{cascade_response, pole_radius, RealBiquad};
use crate::error::{Error, Result};
use crate::signal::{round_shift, FULL_SCALE};

pub const DEFAULT_A0_SHIFT: u32 = 12;
pub const DEFAULT_FIR_SHIFT: u32 = 14;

/// One integer Direct Form I stage. The runtime denominator is `2^a0_shift`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantizedBiquad {
    pub b0: i32,
    pub b1: i32,
    pub b2: i32,
    pub a1: i32,
    pub a2: i32,
    pub a0_shift: u32,
}

impl QuantizedBiquad {
    pub fn identity(a0_shift: u32) -> Self {
        Self {
            b0: 1 << a0_shift,
            b1: 0,
            b2: 0,
            a1: 0,
            a2: 0,
            a0_shift,
        }
    }

    /// The stage's coefficients divided back down to real values.
    pub fn to_real(&self) -> RealBiquad {
        let s = (1i64 << self.a0_shift) as f64;
        RealBiquad {
            b: [self.b0 as f64 / s, self.b1 as f64 / s, self.b2 as f64 / s],
            a: [1.0, self.a1 as f64 / s, self.a2 as f64 / s],
        }
    }

    /// Integer error-feedback taps `(k1, k2)`: the denominator coefficients
    /// rounded to whole numbers. Feeding `-(k1·e[n-1] + k2·e[n-2])` back
    /// into the accumulator shapes rounding noise by `1 + k1·z⁻¹ + k2·z⁻²`,
    /// which cancels most of the pole gain the noise would otherwise see.
    /// Both taps lie in `-2..=2`, so the feedback needs shifts and adds only.
    pub fn error_feedback(&self) -> (i32, i32) {
        let k = |a: i32| round_shift(a as i64, self.a0_shift) as i32;
        (k(self.a1), k(self.a2))
    }

    /// Stability from the integer coefficients alone (Jury conditions).
    pub fn is_stable(&self) -> bool {
        let one = 1i64 << self.a0_shift;
        let (a1, a2) = (self.a1 as i64, self.a2 as i64);
        a2.abs() < one && a1.abs() < one + a2
    }

    pub fn pole_radius(&self) -> f64 {
        let r = self.to_real();
        pole_radius(r.a[1], r.a[2])
    }
}

/// Integer biquad cascade plus the real design it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedBiquadCascade {
    pub stages: Vec<QuantizedBiquad>,
    pub design_reference: Vec<RealBiquad>,
}

impl QuantizedBiquadCascade {
    pub fn from_stages(stages: Vec<QuantizedBiquad>) -> Self {
        let design_reference = stages.iter().map(|s| s.to_real()).collect();
        Self {
            stages,
            design_reference,
        }
    }

    pub fn to_real(&self) -> Vec<RealBiquad> {
        self.stages.iter().map(|s| s.to_real()).collect()
    }

    /// Largest `| |H_quant| - |H_real| |` in dB over `lo..=hi` Hz.
    pub fn max_gain_deviation_db(&self, lo_hz: f64, hi_hz: f64, rate_sps: u32) -> f64 {
        let quant = self.to_real();
        let points = 512;
        (0..=points)
            .map(|k| {
                let f = lo_hz + (hi_hz - lo_hz) * k as f64 / points as f64;
                let w = 2.0 * PI * f / rate_sps as f64;
                let gq = cascade_response(&quant, w).norm();
                let gr = cascade_response(&self.design_reference, w).norm();
                (20.0 * (gq / gr).log10()).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Worst-case accumulator magnitude over all stages for inputs within
    /// ±`input_bound`, from the L1 norm of each stage's impulse response.
    pub fn worst_case_accumulator(&self, input_bound: i32) -> i64 {
        let mut x_bound = input_bound as f64;
        let mut worst = 0i64;
        for s in &self.stages {
            let r = s.to_real();
            let l1 = impulse_l1(&r);
            let recursion_l1 = impulse_l1(&RealBiquad {
                b: [1.0, 0.0, 0.0],
                a: r.a,
            });
            // shaped rounding injects at most half an LSB through each feedback tap
            let (k1, k2) = s.error_feedback();
            let ef = 1.0 + k1.unsigned_abs() as f64 + k2.unsigned_abs() as f64;
            let y_bound = (l1 * x_bound + recursion_l1 * ef / 2.0).ceil() + 1.0;
            let acc = (s.b0.unsigned_abs() as f64
                + s.b1.unsigned_abs() as f64
                + s.b2.unsigned_abs() as f64)
                * x_bound
                + (s.a1.unsigned_abs() as f64 + s.a2.unsigned_abs() as f64) * y_bound
                // rounding bias plus the fed-back residuals
                + ef * (1i64 << (s.a0_shift.max(1) - 1)) as f64;
            worst = worst.max(acc.min(i64::MAX as f64) as i64);
            x_bound = y_bound;
        }
        worst
    }

    pub fn check_overflow(&self) -> Result<()> {
        let bound = self.worst_case_accumulator(FULL_SCALE);
        if bound > i32::MAX as i64 {
            Err(Error::Overflow { bound })
        } else {
            Ok(())
        }
    }

    /// Multiply-accumulates per input sample.
    pub fn macs_per_sample(&self) -> u64 {
        5 * self.stages.len() as u64
    }
}

/// `|A_quant| / |A_real|` at the frequency where the real stage peaks.
fn denominator_correction(st: &RealBiquad, a_quant: [f64; 3]) -> f64 {
    if st.a == a_quant {
        return 1.0;
    }
    let gain = |w: f64| super::biquad_response(st, w).norm();
    let grid = 4096;
    let mut best = 0usize;
    for k in 1..=grid {
        if gain(PI * k as f64 / grid as f64) > gain(PI * best as f64 / grid as f64) {
            best = k;
        }
    }
    // golden-section refinement around the best grid point
    let (mut lo, mut hi) = (
        PI * best.saturating_sub(1) as f64 / grid as f64,
        PI * (best + 1).min(grid) as f64 / grid as f64,
    );
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if gain(m1) < gain(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let w = 0.5 * (lo + hi);
    let den = |a: [f64; 3]| {
        let z1 = num_complex::Complex64::from_polar(1.0, -w);
        (a[0] + z1 * a[1] + z1 * z1 * a[2]).norm()
    };
    den(a_quant) / den(st.a)
}

fn impulse_l1(stage: &RealBiquad) -> f64 {
    let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
    let mut sum = 0.0;
    let mut quiet = 0usize;
    for n in 0..2_000_000usize {
        let x = if n == 0 { 1.0 } else { 0.0 };
        let y = stage.b[0] * x + stage.b[1] * x1 + stage.b[2] * x2
            - stage.a[1] * y1
            - stage.a[2] * y2;
        sum += y.abs();
        x2 = x1;
        x1 = x;
        y2 = y1;
        y1 = y;
        if y.abs() < 1e-13 * sum.max(1e-300) {
            quiet += 1;
            if quiet > 64 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    sum
}

/// Rounds each stage's coefficients to `round(c * 2^a0_shift)` and checks
/// stability and the 32-bit overflow bound of the result.
///
/// The feedback coefficients are rounded first; the feed-forward
/// coefficients are then rescaled by the denominator's rounding error at
/// the stage's peak-gain frequency before rounding, so the stage keeps its
/// designed peak gain.
pub fn quantize_iir(cascade: &[RealBiquad], a0_shift: u32) -> Result<QuantizedBiquadCascade> {
    if a0_shift > 24 {
        return Err(Error::design(format!("a0_shift {a0_shift} too large")));
    }
    let scale = (1i64 << a0_shift) as f64;
    let mut stages = Vec::with_capacity(cascade.len());
    for (i, st) in cascade.iter().enumerate() {
        if (st.a[0] - 1.0).abs() > 1e-12 {
            return Err(Error::design(format!("stage {i} is not normalized (a0 != 1)")));
        }
        if st.pole_radius() >= 1.0 {
            return Err(Error::UnstableStage {
                stage: i,
                radius: st.pole_radius(),
            });
        }
        let q = |c: f64| -> Result<i32> {
            let v = (c * scale).round();
            if v.abs() > i32::MAX as f64 {
                Err(Error::Overflow { bound: v as i64 })
            } else {
                Ok(v as i32)
            }
        };
        let a1 = q(st.a[1])?;
        let a2 = q(st.a[2])?;
        let g = denominator_correction(st, [1.0, a1 as f64 / scale, a2 as f64 / scale]);
        let qs = QuantizedBiquad {
            b0: q(st.b[0] * g)?,
            b1: q(st.b[1] * g)?,
            b2: q(st.b[2] * g)?,
            a1,
            a2,
            a0_shift,
        };
        if !qs.is_stable() {
            return Err(Error::UnstableStage {
                stage: i,
                radius: qs.pole_radius(),
            });
        }
        stages.push(qs);
    }
    let out = QuantizedBiquadCascade {
        stages,
        design_reference: cascade.to_vec(),
    };
    out.check_overflow()?;
    Ok(out)
}

/// Integer FIR taps; output is `(Σ taps·x) >> gain_shift`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantizedFir {
    pub taps: Vec<i32>,
    pub gain_shift: u32,
}

impl QuantizedFir {
    pub fn identity(gain_shift: u32) -> Self {
        Self {
            taps: vec![1 << gain_shift],
            gain_shift,
        }
    }

    pub fn to_real(&self) -> Vec<f64> {
        let s = (1i64 << self.gain_shift) as f64;
        self.taps.iter().map(|&t| t as f64 / s).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.taps.iter().eq(self.taps.iter().rev())
    }

    pub fn worst_case_accumulator(&self, input_bound: i32) -> i64 {
        let abs: i64 = self.taps.iter().map(|&t| t.unsigned_abs() as i64).sum();
        abs * input_bound as i64 + (1i64 << self.gain_shift) / 2
    }

    pub fn check_overflow(&self) -> Result<()> {
        let bound = self.worst_case_accumulator(FULL_SCALE);
        if bound > i32::MAX as i64 {
            Err(Error::Overflow { bound })
        } else {
            Ok(())
        }
    }

    /// Group delay in samples; whole for odd tap counts.
    pub fn group_delay(&self) -> f64 {
        (self.taps.len() as f64 - 1.0) / 2.0
    }

    pub fn macs_per_sample(&self) -> u64 {
        self.taps.len() as u64
    }
}

/// Scales taps by `2^gain_shift` and rounds once per symmetric pair.
pub fn quantize_fir(taps: &[f64], gain_shift: u32) -> Result<QuantizedFir> {
    let n = taps.len();
    if n == 0 {
        return Err(Error::design("empty FIR"));
    }
    for k in 0..n / 2 {
        let (a, b) = (taps[k], taps[n - 1 - k]);
        if (a - b).abs() > 1e-9 * (a.abs() + b.abs()).max(1e-12) {
            return Err(Error::design(format!("FIR taps not symmetric at index {k}")));
        }
    }
    let scale = (1i64 << gain_shift) as f64;
    let mut out = vec![0i32; n];
    for k in 0..n.div_ceil(2) {
        let v = (taps[k] * scale).round();
        if v.abs() > i32::MAX as f64 {
            return Err(Error::Overflow { bound: v as i64 });
        }
        out[k] = v as i32;
        out[n - 1 - k] = v as i32;
    }
    let fir = QuantizedFir {
        taps: out,
        gain_shift,
    };
    fir.check_overflow()?;
    Ok(fir)
}
