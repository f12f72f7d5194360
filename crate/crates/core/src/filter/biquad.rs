use crate::design::{QuantizedBiquad, QuantizedBiquadCascade};
use crate::signal::{round_shift, SampleQ14, StreamBlock};

/// Direct Form I history for one stage. `e1` and `e2` are the last two
/// rounding residuals used by [`Rounding::NoiseShaped`]; they stay 0 under
/// plain rounding.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BiquadStateDF1 {
    pub x1: i32,
    pub x2: i32,
    pub y1: i32,
    pub y2: i32,
    pub e1: i32,
    pub e2: i32,
}

/// How the `1/a0` shift rounds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rounding {
    /// Round half up: add `2^(s−1)` then shift.
    Nearest,
    /// Round half up, with second-order error feedback: the residuals the
    /// shift discarded on the last two steps are fed back through the
    /// stage's integer-rounded denominator taps (see
    /// [`QuantizedBiquad::error_feedback`]). Rounding noise then mostly
    /// cancels against the poles instead of being amplified by them, which
    /// matters for narrow low-frequency bands.
    #[default]
    NoiseShaped,
}

/// One Direct Form I step:
/// `y = (b0·x + b1·x1 + b2·x2 − a1·y1 − a2·y2 + 2^(s−1)) >> s`.
///
/// The accumulator must fit in 32 bits; that is guaranteed at design time
/// and asserted in debug builds.
#[inline]
pub fn biquad_tick(state: &mut BiquadStateDF1, c: &QuantizedBiquad, x: SampleQ14) -> SampleQ14 {
    let acc = c.b0 as i64 * x as i64 + c.b1 as i64 * state.x1 as i64 + c.b2 as i64 * state.x2 as i64
        - c.a1 as i64 * state.y1 as i64
        - c.a2 as i64 * state.y2 as i64;
    let biased = acc + if c.a0_shift == 0 { 0 } else { 1i64 << (c.a0_shift - 1) };
    debug_assert!(
        i32::try_from(biased).is_ok(),
        "biquad accumulator overflow: {biased}"
    );
    let y = round_shift(acc, c.a0_shift) as i32;
    state.x2 = state.x1;
    state.x1 = x;
    state.y2 = state.y1;
    state.y1 = y;
    y
}

/// [`biquad_tick`] with the shaped residuals folded into the accumulator.
#[inline]
pub fn biquad_tick_shaped(
    state: &mut BiquadStateDF1,
    c: &QuantizedBiquad,
    x: SampleQ14,
) -> SampleQ14 {
    let (k1, k2) = c.error_feedback();
    let acc = c.b0 as i64 * x as i64 + c.b1 as i64 * state.x1 as i64 + c.b2 as i64 * state.x2 as i64
        - c.a1 as i64 * state.y1 as i64
        - c.a2 as i64 * state.y2 as i64
        - k1 as i64 * state.e1 as i64
        - k2 as i64 * state.e2 as i64;
    let biased = acc + if c.a0_shift == 0 { 0 } else { 1i64 << (c.a0_shift - 1) };
    debug_assert!(
        i32::try_from(biased).is_ok(),
        "biquad accumulator overflow: {biased}"
    );
    let y = round_shift(acc, c.a0_shift);
    state.e2 = state.e1;
    state.e1 = (acc - (y << c.a0_shift)) as i32;
    let y = y as i32;
    state.x2 = state.x1;
    state.x1 = x;
    state.y2 = state.y1;
    state.y1 = y;
    y
}

/// Applies `stages` in order, feeding each output to the next stage.
#[inline]
pub fn cascade_tick(
    states: &mut [BiquadStateDF1],
    stages: &[QuantizedBiquad],
    rounding: Rounding,
    x: SampleQ14,
) -> SampleQ14 {
    let step = match rounding {
        Rounding::Nearest => biquad_tick,
        Rounding::NoiseShaped => biquad_tick_shaped,
    };
    states
        .iter_mut()
        .zip(stages)
        .fold(x, |v, (st, c)| step(st, c, v))
}

/// A streaming integer biquad cascade.
#[derive(Debug, Clone)]
pub struct BiquadCascade {
    coeffs: QuantizedBiquadCascade,
    states: Vec<BiquadStateDF1>,
    rounding: Rounding,
    rate_sps: Option<u32>,
    macs: u64,
}

impl BiquadCascade {
    pub fn new(coeffs: QuantizedBiquadCascade) -> Self {
        let states = vec![BiquadStateDF1::default(); coeffs.stages.len()];
        Self {
            coeffs,
            states,
            rounding: Rounding::default(),
            rate_sps: None,
            macs: 0,
        }
    }

    pub fn with_rounding(mut self, rounding: Rounding) -> Self {
        self.rounding = rounding;
        self
    }

    pub fn rounding(&self) -> Rounding {
        self.rounding
    }

    pub fn with_rate(mut self, rate_sps: u32) -> Self {
        self.rate_sps = Some(rate_sps);
        self
    }

    pub fn coeffs(&self) -> &QuantizedBiquadCascade {
        &self.coeffs
    }

    pub fn states(&self) -> &[BiquadStateDF1] {
        &self.states
    }

    /// Multiply-accumulates performed since construction or the last reset.
    pub fn macs(&self) -> u64 {
        self.macs
    }
}

impl StreamBlock for BiquadCascade {
    type Output = SampleQ14;

    #[inline]
    fn tick(&mut self, x: SampleQ14) -> SampleQ14 {
        self.macs += 5 * self.coeffs.stages.len() as u64;
        cascade_tick(&mut self.states, &self.coeffs.stages, self.rounding, x)
    }

    fn reset(&mut self) {
        self.states.iter_mut().for_each(|s| *s = BiquadStateDF1::default());
        self.macs = 0;
    }

    fn rate_sps(&self) -> Option<u32> {
        self.rate_sps
    }
}
