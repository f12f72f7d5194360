use crate::design::QuantizedFir;
use crate::signal::{round_shift, SampleQ14, StreamBlock};

/// Ring-buffered integer FIR filter.
#[derive(Debug, Clone)]
pub struct FirFilter {
    taps: QuantizedFir,
    ring: Vec<i32>,
    head: usize,
    rate_sps: Option<u32>,
    macs: u64,
}

impl FirFilter {
    pub fn new(taps: QuantizedFir) -> Self {
        let n = taps.taps.len();
        Self {
            taps,
            ring: vec![0; n],
            head: 0,
            rate_sps: None,
            macs: 0,
        }
    }

    pub fn with_rate(mut self, rate_sps: u32) -> Self {
        self.rate_sps = Some(rate_sps);
        self
    }

    pub fn taps(&self) -> &QuantizedFir {
        &self.taps
    }

    pub fn macs(&self) -> u64 {
        self.macs
    }
}

/// `y = (Σ taps[k]·x[n−k] + 2^(s−1)) >> s` over a ring buffer whose newest
/// sample sits at `head`.
#[inline]
pub fn fir_tick(ring: &mut [i32], head: &mut usize, taps: &QuantizedFir, x: SampleQ14) -> SampleQ14 {
    let n = ring.len();
    *head = if *head == 0 { n - 1 } else { *head - 1 };
    ring[*head] = x;
    let (newer, older) = ring.split_at(*head);
    // ring[head..] holds x[n], x[n-1], ...; ring[..head] continues the history
    let acc: i64 = older
        .iter()
        .chain(newer.iter())
        .zip(&taps.taps)
        .map(|(&v, &t)| v as i64 * t as i64)
        .sum();
    debug_assert!(i32::try_from(acc).is_ok(), "FIR accumulator overflow: {acc}");
    round_shift(acc, taps.gain_shift) as i32
}

impl StreamBlock for FirFilter {
    type Output = SampleQ14;

    #[inline]
    fn tick(&mut self, x: SampleQ14) -> SampleQ14 {
        self.macs += self.taps.taps.len() as u64;
        fir_tick(&mut self.ring, &mut self.head, &self.taps, x)
    }

    fn reset(&mut self) {
        self.ring.iter_mut().for_each(|v| *v = 0);
        self.head = 0;
        self.macs = 0;
    }

    fn rate_sps(&self) -> Option<u32> {
        self.rate_sps
    }
}
