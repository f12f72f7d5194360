//! Integer streaming filters: biquad cascades, FIR, decimation and banks.

mod bank;
mod biquad;
mod decimate;
mod fir;

pub use bank::{BandId, FilterBank, Spacing};
pub use biquad::{
    biquad_tick, biquad_tick_shaped, cascade_tick, BiquadCascade, BiquadStateDF1, Rounding,
};
pub use decimate::Decimator;
pub use fir::{fir_tick, FirFilter};

use crate::design::{QuantizedBiquadCascade, QuantizedFir};
use crate::signal::{SampleQ14, StreamBlock};

/// Either runtime filter family behind one streaming interface.
#[derive(Debug, Clone)]
pub enum Filter {
    Iir(BiquadCascade),
    Fir(FirFilter),
}

impl Filter {
    pub fn iir(c: QuantizedBiquadCascade) -> Self {
        Filter::Iir(BiquadCascade::new(c))
    }

    pub fn fir(t: QuantizedFir) -> Self {
        Filter::Fir(FirFilter::new(t))
    }

    pub fn macs(&self) -> u64 {
        match self {
            Filter::Iir(f) => f.macs(),
            Filter::Fir(f) => f.macs(),
        }
    }

    pub fn macs_per_sample(&self) -> u64 {
        match self {
            Filter::Iir(f) => f.coeffs().macs_per_sample(),
            Filter::Fir(f) => f.taps().macs_per_sample(),
        }
    }
}

impl StreamBlock for Filter {
    type Output = SampleQ14;

    #[inline]
    fn tick(&mut self, x: SampleQ14) -> SampleQ14 {
        match self {
            Filter::Iir(f) => f.tick(x),
            Filter::Fir(f) => f.tick(x),
        }
    }

    fn reset(&mut self) {
        match self {
            Filter::Iir(f) => f.reset(),
            Filter::Fir(f) => f.reset(),
        }
    }

    fn rate_sps(&self) -> Option<u32> {
        match self {
            Filter::Iir(f) => f.rate_sps(),
            Filter::Fir(f) => f.rate_sps(),
        }
    }
}
