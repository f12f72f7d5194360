//! Group/phase-delay compensation of zero-crossing phase estimates.
//!
//! A table maps the estimated period (twice the half-period, in DSP
//! samples) to the chain's phase delay in sixteenths of a sample. The phase
//! correction is the delay expressed as a fraction of that period.

use std::f64::consts::PI;
use std::fmt::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::design::coeff_file::{content_lines, parse_num};
use crate::design::{phase_delay_branch, unwrap_phase};
use crate::error::{Error, Result};
use crate::estimator::{FeatureEstimate, TURN_MDEG};
use crate::harness::TransferEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CalibrationSource {
    FirConstant,
    IirMeasured,
    IirAnalytic,
}

impl CalibrationSource {
    fn as_str(self) -> &'static str {
        match self {
            Self::FirConstant => "fir-constant",
            Self::IirMeasured => "iir-measured",
            Self::IirAnalytic => "iir-analytic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalibrationEntry {
    pub period_samples: u32,
    pub delay_sixteenths: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayCalibrationTable {
    pub band_id: u32,
    pub source: CalibrationSource,
    /// Sorted by period. FIR tables hold a single entry with period 0 that
    /// applies to every period.
    pub entries: Vec<CalibrationEntry>,
}

/// Range of even periods covered for a band: from half the low corner to
/// twice the high corner.
pub fn table_periods(rate_sps: f64, lo_hz: f64, hi_hz: f64) -> Vec<u32> {
    let h_min = ((rate_sps / (4.0 * hi_hz)).ceil() as u32).max(1);
    let h_max = (rate_sps / lo_hz).floor() as u32;
    (h_min..=h_max.max(h_min)).map(|h| 2 * h).collect()
}

impl DelayCalibrationTable {
    /// Constant delay of a linear-phase chain.
    pub fn fir_constant(band_id: u32, delay_samples: f64) -> Self {
        Self {
            band_id,
            source: CalibrationSource::FirConstant,
            entries: vec![CalibrationEntry {
                period_samples: 0,
                delay_sixteenths: (delay_samples * 16.0).round().max(0.0) as u32,
            }],
        }
    }

    /// Samples a phase-delay curve at every even period of the band's range.
    pub fn from_transfer(
        band_id: u32,
        source: CalibrationSource,
        transfer: &TransferEstimate,
        lo_hz: f64,
        hi_hz: f64,
    ) -> Result<Self> {
        if transfer.freqs_hz.is_empty() {
            return Err(Error::config("transfer estimate has no frequency bins"));
        }
        let rate = transfer.rate_sps;
        let entries = table_periods(rate, lo_hz, hi_hz)
            .into_iter()
            .map(|p| {
                let f = rate / p as f64;
                let delay = transfer.phase_delay_at(f).unwrap_or(0.0) * rate;
                CalibrationEntry {
                    period_samples: p,
                    delay_sixteenths: (delay * 16.0).round().max(0.0) as u32,
                }
            })
            .collect();
        Ok(Self {
            band_id,
            source,
            entries,
        })
    }

    /// Builds a table from a known frequency response `h(f_hz)` of the
    /// chain, evaluated on the same log grid the measurement would use.
    pub fn from_response(
        band_id: u32,
        rate_sps: f64,
        lo_hz: f64,
        hi_hz: f64,
        h: impl Fn(f64) -> Complex64,
    ) -> Result<Self> {
        let t = analytic_transfer(rate_sps, lo_hz / 2.0, (2.0 * hi_hz).min(rate_sps / 2.0), 96, h);
        Self::from_transfer(band_id, CalibrationSource::IirAnalytic, &t, lo_hz, hi_hz)
    }

    /// Delay in sixteenths for `period`, and whether the period fell outside
    /// the table and was clamped to its nearest edge.
    pub fn lookup(&self, period_samples: u32) -> (u32, bool) {
        let e = &self.entries;
        match e.len() {
            0 => (0, true),
            _ if self.source == CalibrationSource::FirConstant => (e[0].delay_sixteenths, false),
            _ => {
                let first = e[0];
                let last = e[e.len() - 1];
                if period_samples < first.period_samples {
                    return (first.delay_sixteenths, true);
                }
                if period_samples > last.period_samples {
                    return (last.delay_sixteenths, true);
                }
                let i = e.partition_point(|v| v.period_samples < period_samples);
                if e[i].period_samples == period_samples || i == 0 {
                    return (e[i].delay_sixteenths, false);
                }
                let below = e[i - 1];
                if period_samples - below.period_samples <= e[i].period_samples - period_samples {
                    (below.delay_sixteenths, false)
                } else {
                    (e[i].delay_sixteenths, false)
                }
            }
        }
    }

    /// `period_samples delay_sixteenths` per line after a `# band <id> <source>`
    /// header.
    pub fn to_text(&self) -> String {
        let mut out = format!("# band {} {}\n", self.band_id, self.source.as_str());
        for e in &self.entries {
            writeln!(out, "{} {}", e.period_samples, e.delay_sixteenths).unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut band_id = 0;
        let mut source = CalibrationSource::IirMeasured;
        for (i, l) in text.lines().enumerate() {
            let toks: Vec<&str> = l.trim().trim_start_matches('#').split_whitespace().collect();
            if l.trim_start().starts_with('#') && toks.first() == Some(&"band") {
                if toks.len() != 3 {
                    return Err(Error::Parse {
                        line: i + 1,
                        msg: "expected `# band <id> <source>`".into(),
                    });
                }
                band_id = parse_num(i + 1, toks[1])?;
                source = match toks[2] {
                    "fir-constant" => CalibrationSource::FirConstant,
                    "iir-measured" => CalibrationSource::IirMeasured,
                    "iir-analytic" => CalibrationSource::IirAnalytic,
                    other => {
                        return Err(Error::Parse {
                            line: i + 1,
                            msg: format!("unknown table source {other:?}"),
                        })
                    }
                };
            }
        }
        let mut entries: Vec<CalibrationEntry> = vec![];
        for (line, l) in content_lines(text) {
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected 2 fields, got {}", toks.len()),
                });
            }
            let e = CalibrationEntry {
                period_samples: parse_num(line, toks[0])?,
                delay_sixteenths: parse_num(line, toks[1])?,
            };
            if entries.last().is_some_and(|p| p.period_samples >= e.period_samples) {
                return Err(Error::Parse {
                    line,
                    msg: "periods must be strictly increasing".into(),
                });
            }
            entries.push(e);
        }
        Ok(Self {
            band_id,
            source,
            entries,
        })
    }
}

/// `TransferEstimate` of a known response on a log grid.
pub fn analytic_transfer(
    rate_sps: f64,
    f_lo_hz: f64,
    f_hi_hz: f64,
    bins_per_octave: u32,
    h: impl Fn(f64) -> Complex64,
) -> TransferEstimate {
    let step = 2f64.powf(1.0 / bins_per_octave as f64);
    let mut freqs = vec![];
    let mut f = f_lo_hz;
    while f <= f_hi_hz * (1.0 + 1e-9) {
        freqs.push(f);
        f *= step;
    }
    let resp: Vec<Complex64> = freqs.iter().map(|&f| h(f)).collect();
    let gain = resp.iter().map(|v| v.norm()).collect();
    let mut phase: Vec<f64> = resp.iter().map(|v| v.arg()).collect();
    unwrap_phase(&mut phase);
    phase_delay_branch(&mut phase);
    let phase_delay_s = freqs
        .iter()
        .zip(&phase)
        .map(|(f, p)| -p / (2.0 * PI * f))
        .collect();
    let group_delay_s = (0..freqs.len())
        .map(|k| {
            let (a, b) = (k.saturating_sub(1), (k + 1).min(freqs.len() - 1));
            if a == b {
                0.0
            } else {
                -(phase[b] - phase[a]) / (2.0 * PI * (freqs[b] - freqs[a]))
            }
        })
        .collect();
    TransferEstimate {
        rate_sps,
        freqs_hz: freqs,
        gain,
        phase_rad: phase,
        phase_delay_s,
        group_delay_s,
    }
}

/// Phase advance in millidegrees for a delay of `d16` sixteenths at
/// `period` samples, rounded to nearest.
pub fn correction_mdeg(delay_sixteenths: u32, period_samples: u32) -> u32 {
    if period_samples == 0 {
        return 0;
    }
    let p = period_samples as i64;
    let c = (TURN_MDEG / 16 * delay_sixteenths as i64 + p / 2) / p;
    c.rem_euclid(TURN_MDEG) as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CorrectedEstimate {
    pub raw: FeatureEstimate,
    pub phase_mdeg: u32,
    pub correction_mdeg: u32,
    pub delay_sixteenths: u32,
    /// Delay-compensated rising crossing, in sixteenths of a sample.
    pub rising_zc_sixteenths: Option<i64>,
    pub falling_zc_sixteenths: Option<i64>,
    pub clamped: bool,
}

impl CorrectedEstimate {
    /// Pass-through used when no table is configured.
    pub fn uncorrected(raw: FeatureEstimate) -> Self {
        Self {
            raw,
            phase_mdeg: raw.phase_mdeg,
            correction_mdeg: 0,
            delay_sixteenths: 0,
            rising_zc_sixteenths: raw.last_rising_zc.map(|z| z * 16),
            falling_zc_sixteenths: raw.last_falling_zc.map(|z| z * 16),
            clamped: false,
        }
    }
}

pub fn apply_correction(est: &FeatureEstimate, table: &DelayCalibrationTable) -> CorrectedEstimate {
    apply_correction_at(est, table, est.period_samples)
}

/// Like [`apply_correction`] but looks the delay up at `lookup_period`
/// instead of the running period estimate.
pub fn apply_correction_at(
    est: &FeatureEstimate,
    table: &DelayCalibrationTable,
    lookup_period: u32,
) -> CorrectedEstimate {
    if !est.valid {
        return CorrectedEstimate::uncorrected(*est);
    }
    let (d16, clamped) = table.lookup(lookup_period);
    let c = correction_mdeg(d16, est.period_samples);
    let phase = (est.phase_mdeg as i64 + c as i64).rem_euclid(TURN_MDEG) as u32;
    CorrectedEstimate {
        raw: *est,
        phase_mdeg: phase,
        correction_mdeg: c,
        delay_sixteenths: d16,
        rising_zc_sixteenths: est.last_rising_zc.map(|z| z * 16 - d16 as i64),
        falling_zc_sixteenths: est.last_falling_zc.map(|z| z * 16 - d16 as i64),
        clamped,
    }
}

/// Zero-phase filtering by a real, non-negative gain curve `gain(f_hz)`.
pub fn zero_shift_filter(x: &[f64], rate_sps: f64, gain: impl Fn(f64) -> f64) -> Vec<f64> {
    crate::fft::apply_real_gain(x, |f| gain(f * rate_sps))
}

/// Real gain curve of a chain, used as a zero-phase reference filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroShiftReference {
    pub rate_sps: f64,
    pub freqs_hz: Vec<f64>,
    pub gain: Vec<f64>,
}

impl ZeroShiftReference {
    /// Samples `|h(f)|` on a uniform grid from 0 to Nyquist.
    pub fn from_response(rate_sps: f64, points: usize, h: impl Fn(f64) -> Complex64) -> Self {
        let points = points.max(2);
        let freqs_hz: Vec<f64> = (0..points)
            .map(|k| k as f64 * rate_sps / 2.0 / (points - 1) as f64)
            .collect();
        let gain = freqs_hz.iter().map(|&f| h(f).norm()).collect();
        Self {
            rate_sps,
            freqs_hz,
            gain,
        }
    }

    /// Measured gain; zero outside the measured range.
    pub fn from_transfer(t: &TransferEstimate) -> Self {
        Self {
            rate_sps: t.rate_sps,
            freqs_hz: t.freqs_hz.clone(),
            gain: t.gain.clone(),
        }
    }

    pub fn gain_at(&self, f_hz: f64) -> f64 {
        let f = &self.freqs_hz;
        if f.is_empty() || f_hz < f[0] || f_hz > f[f.len() - 1] {
            return 0.0;
        }
        let i = f.partition_point(|&v| v <= f_hz).clamp(1, f.len() - 1);
        let t = (f_hz - f[i - 1]) / (f[i] - f[i - 1]);
        self.gain[i - 1] + t * (self.gain[i] - self.gain[i - 1])
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        zero_shift_filter(x, self.rate_sps, |f| self.gain_at(f))
    }
}
