//! Pipeline configuration, loadable from and savable to TOML.

use serde::{Deserialize, Serialize};

use crate::design::{
    default_fir_taps, dense_bank_bands, FilterFamily, FilterSpec, DEFAULT_AA_CORNER_HZ, DEFAULT_A0_SHIFT,
    DEFAULT_BANDS, DEFAULT_DSP_RATE, DEFAULT_FIR_SHIFT, DEFAULT_FULL_RATE,
};
use crate::detector::DetectorConfig;
use crate::error::{Error, Result};
use crate::estimator::EstimatorConfig;
use crate::filter::{Rounding, Spacing};
use crate::trigger::RearmPolicy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntiAliasConfig {
    pub family: FilterFamily,
    pub corner_hz: f64,
    /// Biquad stages for IIR, taps for FIR.
    pub order: usize,
    /// Coefficient scale: `a0_shift` for IIR, gain shift for FIR.
    pub shift: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CalibrationMode {
    /// Raw zero-crossing phase.
    None,
    /// Constant delay of a linear-phase chain.
    FirConstant,
    /// Table computed from the designed response.
    #[default]
    IirAnalytic,
    /// Table measured on a recording with a transfer estimate.
    IirMeasured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandConfig {
    pub id: u32,
    pub name: String,
    pub family: FilterFamily,
    pub lo_hz: f64,
    pub hi_hz: f64,
    /// Biquad stages for IIR, taps for FIR.
    pub order: usize,
    pub shift: u32,
    #[serde(default)]
    pub calibration: CalibrationMode,
    pub detector: DetectorConfig,
}

impl BandConfig {
    pub fn center_hz(&self) -> f64 {
        (self.lo_hz * self.hi_hz).sqrt()
    }

    pub fn filter_spec(&self, rate_sps: u32) -> FilterSpec {
        match self.family {
            FilterFamily::IirButterworth => FilterSpec::butterworth_bandpass(self.lo_hz, self.hi_hz, self.order, rate_sps),
            FilterFamily::FirWindowed => FilterSpec::fir_bandpass(self.lo_hz, self.hi_hz, self.order, rate_sps),
        }
    }
}

/// Which period indexes the calibration table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableIndex {
    /// The running period estimate.
    #[default]
    RunningPeriod,
    /// The period of the band's center frequency.
    BandCenter,
    /// The sum of the last two half-periods: one full cycle, so half as
    /// noisy as twice the latest half-period.
    FullPeriod,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BankConfig {
    pub spacing: Spacing,
    /// Winner-take-all smoothing for dense banks; defaults to one period of
    /// the middle band.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub winner_tau_samples: Option<u32>,
    #[serde(default)]
    pub table_index: TableIndex,
}

/// Identifier of the winner channel of a dense bank, usable as a trigger's
/// band.
pub const WINNER_CHANNEL: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum TriggerTarget {
    Phase { degrees: f64 },
    DelayAfterRising { ms: f64 },
    DelayAfterFalling { ms: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriggerConfig {
    pub id: u32,
    pub band: u32,
    pub target: TriggerTarget,
    pub max_pulses: u32,
    /// Window after arming in seconds; absent means unlimited.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_s: Option<f64>,
    #[serde(default)]
    pub arm_s: f64,
    #[serde(default)]
    pub rearm: RearmPolicy,
    /// Compare against the delay-compensated phase.
    #[serde(default = "yes")]
    pub corrected: bool,
}

fn yes() -> bool {
    true
}

/// Adaptive detector whose activation delay is half a period at the band's
/// center.
pub fn default_detector(lo_hz: f64, hi_hz: f64) -> DetectorConfig {
    let center = (lo_hz * hi_hz).sqrt();
    DetectorConfig {
        activation_delay: (DEFAULT_DSP_RATE as f64 / center / 2.0).round() as u32,
        ..DetectorConfig::adaptive(DEFAULT_DSP_RATE)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub input_rate_sps: u32,
    pub decimation: u32,
    #[serde(default)]
    pub rounding: Rounding,
    /// Absent means no anti-alias filter (only sensible with decimation 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anti_alias: Option<AntiAliasConfig>,
    pub bank: BankConfig,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    pub bands: Vec<BandConfig>,
    #[serde(default)]
    pub triggers: Vec<TriggerConfig>,
}

impl PipelineConfig {
    /// Five octave-wide IIR bands behind an IIR anti-alias filter.
    pub fn workstation() -> Self {
        let bands = DEFAULT_BANDS
            .iter()
            .enumerate()
            .map(|(i, b)| BandConfig {
                id: i as u32,
                name: b.name.into(),
                family: FilterFamily::IirButterworth,
                lo_hz: b.lo_hz,
                hi_hz: b.hi_hz,
                order: 2,
                shift: b.a0_shift,
                calibration: CalibrationMode::IirAnalytic,
                detector: default_detector(b.lo_hz, b.hi_hz),
            })
            .collect();
        Self {
            input_rate_sps: DEFAULT_FULL_RATE,
            decimation: DEFAULT_FULL_RATE / DEFAULT_DSP_RATE,
            rounding: Rounding::default(),
            anti_alias: Some(AntiAliasConfig {
                family: FilterFamily::IirButterworth,
                corner_hz: DEFAULT_AA_CORNER_HZ,
                order: 2,
                shift: DEFAULT_A0_SHIFT,
            }),
            bank: BankConfig {
                spacing: Spacing::Wide,
                winner_tau_samples: None,
                table_index: TableIndex::RunningPeriod,
            },
            estimator: EstimatorConfig::default(),
            bands,
            triggers: vec![],
        }
    }

    /// The beta band alone, for small targets.
    pub fn embedded() -> Self {
        let mut cfg = Self::workstation();
        cfg.bands.retain(|b| b.name == "beta");
        cfg
    }

    /// The workstation profile with linear-phase FIR filters throughout.
    pub fn workstation_fir() -> Self {
        let mut cfg = Self::workstation();
        let aa_taps = default_fir_taps(DEFAULT_AA_CORNER_HZ / 2.0, DEFAULT_FULL_RATE);
        cfg.anti_alias = Some(AntiAliasConfig {
            family: FilterFamily::FirWindowed,
            corner_hz: DEFAULT_AA_CORNER_HZ,
            order: aa_taps,
            shift: DEFAULT_FIR_SHIFT,
        });
        for b in &mut cfg.bands {
            b.family = FilterFamily::FirWindowed;
            b.order = default_fir_taps(b.lo_hz, DEFAULT_DSP_RATE);
            b.shift = DEFAULT_FIR_SHIFT;
            b.calibration = CalibrationMode::FirConstant;
        }
        cfg
    }

    /// Quarter-octave, half-octave-wide IIR bands with winner-take-all.
    pub fn dense(lo_hz: f64, count: usize) -> Self {
        let mut cfg = Self::workstation();
        cfg.bank.spacing = Spacing::Dense;
        cfg.bands = dense_bank_bands(lo_hz, count)
            .into_iter()
            .enumerate()
            .map(|(i, (c, lo, hi))| BandConfig {
                id: i as u32,
                name: format!("{c:.1}hz"),
                family: FilterFamily::IirButterworth,
                lo_hz: lo,
                hi_hz: hi,
                order: 2,
                shift: if lo < 6.0 { 14 } else { DEFAULT_A0_SHIFT },
                calibration: CalibrationMode::IirAnalytic,
                detector: default_detector(lo, hi),
            })
            .collect();
        cfg
    }

    pub fn dsp_rate_sps(&self) -> u32 {
        self.input_rate_sps / self.decimation.max(1)
    }

    pub fn band(&self, id: u32) -> Option<&BandConfig> {
        self.bands.iter().find(|b| b.id == id)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::config(m));
        if self.input_rate_sps == 0 || self.decimation == 0 {
            return bad("input rate and decimation must be positive".into());
        }
        if !self.input_rate_sps.is_multiple_of(self.decimation) {
            return bad(format!(
                "decimation {} does not divide input rate {}",
                self.decimation, self.input_rate_sps
            ));
        }
        let dsp_nyq = self.dsp_rate_sps() as f64 / 2.0;
        match &self.anti_alias {
            Some(aa) => {
                if !(aa.corner_hz > 0.0 && aa.corner_hz < dsp_nyq) {
                    return bad(format!(
                        "anti-alias corner {} Hz must be below the decimated Nyquist {dsp_nyq} Hz",
                        aa.corner_hz
                    ));
                }
            }
            None if self.decimation > 1 => {
                return bad("decimation needs an anti-alias filter".into());
            }
            None => {}
        }
        if self.bands.is_empty() {
            return bad("at least one band is required".into());
        }
        for (i, b) in self.bands.iter().enumerate() {
            if self.bands[..i].iter().any(|o| o.id == b.id) {
                return bad(format!("duplicate band id {}", b.id));
            }
            if b.id == WINNER_CHANNEL {
                return bad(format!("band id {} is reserved", b.id));
            }
            if !(b.lo_hz > 0.0 && b.lo_hz < b.hi_hz && b.hi_hz < dsp_nyq) {
                return bad(format!(
                    "band {}: need 0 < lo < hi < {dsp_nyq} Hz, got {}..{}",
                    b.name, b.lo_hz, b.hi_hz
                ));
            }
            b.filter_spec(self.dsp_rate_sps()).validate()?;
            b.detector.validate()?;
            let fir_cal = b.calibration == CalibrationMode::FirConstant;
            let fir_chain = b.family == FilterFamily::FirWindowed
                && self.anti_alias.as_ref().is_none_or(|a| a.family == FilterFamily::FirWindowed);
            if fir_cal && !fir_chain {
                return bad(format!("band {}: constant-delay calibration needs an all-FIR chain", b.name));
            }
        }
        for t in &self.triggers {
            let winner = t.band == WINNER_CHANNEL && self.bank.spacing == Spacing::Dense;
            if self.band(t.band).is_none() && !winner {
                return bad(format!("trigger {} references unknown band {}", t.id, t.band));
            }
            if let TriggerTarget::Phase { degrees } = t.target {
                if !(0.0..360.0).contains(&degrees) {
                    return bad(format!("trigger {}: phase target must be in [0, 360)", t.id));
                }
            }
            if let TriggerTarget::DelayAfterRising { ms } | TriggerTarget::DelayAfterFalling { ms } = t.target {
                if !(ms >= 0.0 && ms.is_finite()) {
                    return bad(format!("trigger {}: delay must be non-negative", t.id));
                }
            }
            if t.window_s.is_some_and(|w| !(w >= 0.0)) || !(t.arm_s >= 0.0) {
                return bad(format!("trigger {}: window and arm time must be non-negative", t.id));
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }
}
