//! Offline floating-point filter design and quantization to the integer
//! runtime format.

mod butterworth;
pub(crate) mod coeff_file;
mod fir;
mod quantize;
mod response;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use butterworth::design_butterworth;
pub use coeff_file::{parse_cascade, parse_fir, write_cascade, write_fir};
pub use fir::design_fir;
pub use quantize::{
    quantize_fir, quantize_iir, QuantizedBiquad, QuantizedBiquadCascade, QuantizedFir,
    DEFAULT_A0_SHIFT, DEFAULT_FIR_SHIFT,
};
pub use response::{
    biquad_response, cascade_response, fir_response, phase_delay_branch, unwrap_phase,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterKind {
    LowPass,
    BandPass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterFamily {
    IirButterworth,
    FirWindowed,
}

/// What to design. For IIR filters `order` counts biquad stages; for FIR
/// filters it counts taps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub family: FilterFamily,
    pub corners_hz: Vec<f64>,
    pub order: usize,
    pub rate_sps: u32,
}

impl FilterSpec {
    pub fn butterworth_lowpass(corner_hz: f64, stages: usize, rate_sps: u32) -> Self {
        Self {
            kind: FilterKind::LowPass,
            family: FilterFamily::IirButterworth,
            corners_hz: vec![corner_hz],
            order: stages,
            rate_sps,
        }
    }

    pub fn butterworth_bandpass(lo_hz: f64, hi_hz: f64, stages: usize, rate_sps: u32) -> Self {
        Self {
            kind: FilterKind::BandPass,
            family: FilterFamily::IirButterworth,
            corners_hz: vec![lo_hz, hi_hz],
            order: stages,
            rate_sps,
        }
    }

    pub fn fir_lowpass(corner_hz: f64, taps: usize, rate_sps: u32) -> Self {
        Self {
            kind: FilterKind::LowPass,
            family: FilterFamily::FirWindowed,
            corners_hz: vec![corner_hz],
            order: taps,
            rate_sps,
        }
    }

    pub fn fir_bandpass(lo_hz: f64, hi_hz: f64, taps: usize, rate_sps: u32) -> Self {
        Self {
            kind: FilterKind::BandPass,
            family: FilterFamily::FirWindowed,
            corners_hz: vec![lo_hz, hi_hz],
            order: taps,
            rate_sps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nyquist = self.rate_sps as f64 / 2.0;
        if self.rate_sps == 0 {
            return Err(Error::design("rate must be positive"));
        }
        if self.order == 0 {
            return Err(Error::design("stage/tap count must be positive"));
        }
        let expected = match self.kind {
            FilterKind::LowPass => 1,
            FilterKind::BandPass => 2,
        };
        if self.corners_hz.len() != expected {
            return Err(Error::design(format!(
                "{:?} needs {expected} corner(s), got {}",
                self.kind,
                self.corners_hz.len()
            )));
        }
        for &c in &self.corners_hz {
            if !(c > 0.0 && c < nyquist) {
                return Err(Error::design(format!(
                    "corner {c} Hz outside (0, {nyquist}) Hz"
                )));
            }
        }
        if self.kind == FilterKind::BandPass && self.corners_hz[0] >= self.corners_hz[1] {
            return Err(Error::design(format!(
                "degenerate band: low corner {} >= high corner {}",
                self.corners_hz[0], self.corners_hz[1]
            )));
        }
        Ok(())
    }

    /// Frequency at which pass-band gain is normalized to one.
    pub fn reference_hz(&self) -> f64 {
        match self.kind {
            FilterKind::LowPass => 0.0,
            FilterKind::BandPass => (self.corners_hz[0] * self.corners_hz[1]).sqrt(),
        }
    }

    /// The pass band as `(lo, hi)`; low-pass filters start at 0 Hz.
    pub fn passband_hz(&self) -> (f64, f64) {
        match self.kind {
            FilterKind::LowPass => (0.0, self.corners_hz[0]),
            FilterKind::BandPass => (self.corners_hz[0], self.corners_hz[1]),
        }
    }
}

/// A real-valued biquad with `a[0] == 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealBiquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl RealBiquad {
    pub const IDENTITY: RealBiquad = RealBiquad {
        b: [1.0, 0.0, 0.0],
        a: [1.0, 0.0, 0.0],
    };

    /// Largest pole magnitude of the stage.
    pub fn pole_radius(&self) -> f64 {
        pole_radius(self.a[1], self.a[2])
    }
}

pub(crate) fn pole_radius(a1: f64, a2: f64) -> f64 {
    let disc = a1 * a1 - 4.0 * a2;
    if disc < 0.0 {
        a2.sqrt()
    } else {
        let s = disc.sqrt();
        ((-a1 + s) / 2.0).abs().max(((-a1 - s) / 2.0).abs())
    }
}

/// A default detector band at the DSP rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandDefault {
    pub name: &'static str,
    pub lo_hz: f64,
    pub hi_hz: f64,
    /// Theta needs 14 bits to keep coefficient error under 0.2 dB.
    pub a0_shift: u32,
}

/// Default detector bands at the 500 sps DSP rate. These follow octave-wide
/// Butterworth bands; they are configuration defaults, not constants.
pub const DEFAULT_BANDS: [BandDefault; 5] = [
    BandDefault { name: "theta", lo_hz: 3.0, hi_hz: 8.0, a0_shift: 14 },
    BandDefault { name: "alpha", lo_hz: 6.0, hi_hz: 16.0, a0_shift: 12 },
    BandDefault { name: "beta", lo_hz: 12.0, hi_hz: 32.0, a0_shift: 12 },
    BandDefault { name: "low-gamma", lo_hz: 24.0, hi_hz: 64.0, a0_shift: 12 },
    BandDefault { name: "mid-gamma", lo_hz: 48.0, hi_hz: 128.0, a0_shift: 12 },
];

pub const DEFAULT_FULL_RATE: u32 = 2500;
pub const DEFAULT_DSP_RATE: u32 = 500;
pub const DEFAULT_AA_CORNER_HZ: f64 = 100.0;

/// Tap count of roughly two periods of `low_corner_hz`, rounded up to odd.
pub fn default_fir_taps(low_corner_hz: f64, rate_sps: u32) -> usize {
    let n = (2.0 * rate_sps as f64 / low_corner_hz).ceil() as usize;
    n | 1
}

/// Quarter-octave spaced, half-octave wide bands covering `lo_hz..=hi_hz`
/// centers. Returns `(center, lo corner, hi corner)`.
pub fn dense_bank_bands(lo_hz: f64, count: usize) -> Vec<(f64, f64, f64)> {
    (0..count)
        .map(|k| {
            let c = lo_hz * 2f64.powf(k as f64 / 4.0);
            (c, c * 2f64.powf(-0.25), c * 2f64.powf(0.25))
        })
        .collect()
}
