use crate::signal::SampleQ14;

/// Keeps one sample in every `factor`, the one arriving at counter 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decimator {
    factor: u32,
    phase: u32,
}

impl Decimator {
    pub fn new(factor: u32) -> Self {
        assert!(factor > 0, "decimation factor must be positive");
        Self { factor, phase: 0 }
    }

    pub fn factor(&self) -> u32 {
        self.factor
    }

    /// Full-rate index of DSP-rate sample `k`.
    pub fn full_rate_index(&self, k: i64) -> i64 {
        k * self.factor as i64
    }

    #[inline]
    pub fn tick(&mut self, x: SampleQ14) -> Option<SampleQ14> {
        let emit = self.phase == 0;
        self.phase += 1;
        if self.phase == self.factor {
            self.phase = 0;
        }
        emit.then_some(x)
    }

    pub fn reset(&mut self) {
        self.phase = 0;
    }
}
