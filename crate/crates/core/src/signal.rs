//! Sample, time-series and streaming-block contracts shared by every stage.

use crate::error::{Error, Result};

/// A 14-bit signal value carried in a 32-bit integer for MAC headroom.
pub type SampleQ14 = i32;

/// Largest magnitude a pipeline input or steady-state output may take.
pub const FULL_SCALE: SampleQ14 = 8191;

/// A uniformly sampled integer signal.
///
/// `t0` is the index of the first sample at this series' own rate; a
/// decimated series keeps `t0` so that sample `k` maps back to full-rate
/// index `(t0 + k) * factor + offset` exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeSeries {
    pub rate_sps: u32,
    pub t0: i64,
    pub samples: Vec<SampleQ14>,
}

impl TimeSeries {
    pub fn new(rate_sps: u32, samples: Vec<SampleQ14>) -> Self {
        Self {
            rate_sps,
            t0: 0,
            samples,
        }
    }

    /// Builds a series after checking every sample lies within ±[`FULL_SCALE`].
    pub fn from_checked(rate_sps: u32, samples: Vec<SampleQ14>) -> Result<Self> {
        check_range(&samples)?;
        Ok(Self::new(rate_sps, samples))
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.rate_sps as f64
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.samples.iter().map(|&s| s as f64).collect()
    }
}

/// Rejects any sample outside ±[`FULL_SCALE`].
pub fn check_range(samples: &[SampleQ14]) -> Result<()> {
    match samples.iter().position(|s| s.abs() > FULL_SCALE) {
        Some(index) => Err(Error::OutOfRange {
            index,
            value: samples[index] as i64,
            limit: FULL_SCALE,
        }),
        None => Ok(()),
    }
}

/// A causal, deterministic sample-by-sample processing stage.
pub trait StreamBlock {
    type Output;

    fn tick(&mut self, x: SampleQ14) -> Self::Output;

    /// Zeroes all history; the block then behaves exactly like a fresh one.
    fn reset(&mut self);

    /// The input rate this block was designed for, if it is rate-specific.
    fn rate_sps(&self) -> Option<u32> {
        None
    }
}

/// Folds `tick` over a series. The output has one sample per input sample.
pub fn run_series<B>(block: &mut B, x: &TimeSeries) -> Result<TimeSeries>
where
    B: StreamBlock<Output = SampleQ14> + ?Sized,
{
    if let Some(expected) = block.rate_sps() {
        if expected != x.rate_sps {
            return Err(Error::RateMismatch {
                expected,
                actual: x.rate_sps,
            });
        }
    }
    let samples = x.samples.iter().map(|&s| block.tick(s)).collect();
    Ok(TimeSeries {
        rate_sps: x.rate_sps,
        t0: x.t0,
        samples,
    })
}

/// Passes samples through unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl StreamBlock for Identity {
    type Output = SampleQ14;

    fn tick(&mut self, x: SampleQ14) -> SampleQ14 {
        x
    }

    fn reset(&mut self) {}
}

/// Rounding right shift: adds `2^(shift-1)` before an arithmetic shift.
#[inline(always)]
pub fn round_shift(acc: i64, shift: u32) -> i64 {
    if shift == 0 {
        acc
    } else {
        (acc + (1i64 << (shift - 1))) >> shift
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_run_is_identity() {
        let x = TimeSeries::new(500, vec![1, -2, 3, 8191, -8191]);
        let y = run_series(&mut Identity, &x).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn out_of_range_rejected() {
        let err = TimeSeries::from_checked(500, vec![0, 8192]).unwrap_err();
        assert!(matches!(err, Error::OutOfRange { index: 1, .. }));
        assert!(TimeSeries::from_checked(500, vec![-8191, 8191]).is_ok());
    }

    #[test]
    fn round_shift_half_up() {
        assert_eq!(round_shift(2048, 12), 1);
        assert_eq!(round_shift(2047, 12), 0);
        assert_eq!(round_shift(-2048, 12), 0);
        assert_eq!(round_shift(-2049, 12), -1);
        assert_eq!(round_shift(7, 0), 7);
    }
}
