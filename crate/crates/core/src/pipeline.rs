//! The full streaming chain: anti-alias filter, decimation, band filters,
//! feature estimation, detection, delay compensation and triggering.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calibration::{apply_correction_at, CorrectedEstimate, DelayCalibrationTable};
use crate::config::{
    AntiAliasConfig, BandConfig, CalibrationMode, PipelineConfig, TableIndex, TriggerTarget, WINNER_CHANNEL,
};
use crate::design::{
    cascade_response, design_butterworth, design_fir, fir_response, quantize_fir, quantize_iir, FilterFamily,
    FilterSpec, QuantizedBiquadCascade, QuantizedFir,
};
use crate::detector::{Detector, DetectorEdge, OscillationEvent};
use crate::error::{Error, Result};
use crate::estimator::{FeatureEstimate, WinnerState, ZeroCrossingEstimator};
use crate::filter::{BiquadCascade, Decimator, Filter, FilterBank, Rounding, Spacing};
use crate::harness::measure_transfer;
use crate::mac::{MacEntry, MacReport};
use crate::signal::{SampleQ14, StreamBlock, TimeSeries};
use crate::trigger::{RearmPolicy, Trigger, TriggerEvent, TriggerMode, TriggerSpec};

/// Integer coefficients of one designed filter.
#[derive(Debug, Clone, PartialEq)]
pub enum DesignedFilter {
    Iir(QuantizedBiquadCascade),
    Fir(QuantizedFir),
}

impl DesignedFilter {
    pub fn design(spec: &FilterSpec, shift: u32) -> Result<Self> {
        spec.validate()?;
        Ok(match spec.family {
            FilterFamily::IirButterworth => Self::Iir(quantize_iir(&design_butterworth(spec)?, shift)?),
            FilterFamily::FirWindowed => Self::Fir(quantize_fir(&design_fir(spec)?, shift)?),
        })
    }

    /// Response of the quantized filter at `f_hz`.
    pub fn response(&self, f_hz: f64, rate_sps: f64) -> Complex64 {
        let w = 2.0 * PI * f_hz / rate_sps;
        match self {
            Self::Iir(c) => cascade_response(&c.to_real(), w),
            Self::Fir(f) => fir_response(&f.to_real(), w),
        }
    }

    pub fn runtime(&self, rounding: Rounding, rate_sps: u32) -> Filter {
        match self {
            Self::Iir(c) => Filter::Iir(BiquadCascade::new(c.clone()).with_rounding(rounding).with_rate(rate_sps)),
            Self::Fir(f) => Filter::Fir(crate::filter::FirFilter::new(f.clone()).with_rate(rate_sps)),
        }
    }

    /// Double-precision run of the same quantized coefficients.
    pub fn filter_f64(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Self::Iir(c) => {
                let mut y = x.to_vec();
                for st in c.to_real() {
                    let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
                    for v in y.iter_mut() {
                        let x0 = *v;
                        let out = st.b[0] * x0 + st.b[1] * x1 + st.b[2] * x2 - st.a[1] * y1 - st.a[2] * y2;
                        (x2, x1, y2, y1) = (x1, x0, y1, out);
                        *v = out;
                    }
                }
                y
            }
            Self::Fir(f) => {
                let taps = f.to_real();
                (0..x.len())
                    .map(|n| taps.iter().enumerate().take(n + 1).map(|(k, t)| t * x[n - k]).sum())
                    .collect()
            }
        }
    }

    /// Constant group delay in samples for FIR filters.
    pub fn linear_phase_delay(&self) -> Option<f64> {
        match self {
            Self::Iir(_) => None,
            Self::Fir(f) => Some(f.group_delay()),
        }
    }
}

pub fn anti_alias_spec(aa: &AntiAliasConfig, rate_sps: u32) -> FilterSpec {
    match aa.family {
        FilterFamily::IirButterworth => FilterSpec::butterworth_lowpass(aa.corner_hz, aa.order, rate_sps),
        FilterFamily::FirWindowed => FilterSpec::fir_lowpass(aa.corner_hz, aa.order, rate_sps),
    }
}

/// All filters of a configuration, designed and quantized.
#[derive(Debug, Clone)]
pub struct DesignedChain {
    pub input_rate_sps: u32,
    pub dsp_rate_sps: u32,
    pub anti_alias: Option<DesignedFilter>,
    pub bands: Vec<DesignedFilter>,
}

impl DesignedChain {
    pub fn design(cfg: &PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let dsp = cfg.dsp_rate_sps();
        let anti_alias = cfg
            .anti_alias
            .as_ref()
            .map(|aa| DesignedFilter::design(&anti_alias_spec(aa, cfg.input_rate_sps), aa.shift))
            .transpose()?;
        let bands = cfg
            .bands
            .iter()
            .map(|b| DesignedFilter::design(&b.filter_spec(dsp), b.shift))
            .collect::<Result<_>>()?;
        Ok(Self {
            input_rate_sps: cfg.input_rate_sps,
            dsp_rate_sps: dsp,
            anti_alias,
            bands,
        })
    }

    /// Response from the input to band `i`'s output at `f_hz`.
    pub fn response(&self, i: usize, f_hz: f64) -> Complex64 {
        let aa = self
            .anti_alias
            .as_ref()
            .map_or(Complex64::new(1.0, 0.0), |a| a.response(f_hz, self.input_rate_sps as f64));
        aa * self.bands[i].response(f_hz, self.dsp_rate_sps as f64)
    }

    /// Constant chain delay in DSP samples when every filter is FIR.
    pub fn linear_phase_delay(&self, i: usize) -> Option<f64> {
        let aa = match &self.anti_alias {
            Some(a) => a.linear_phase_delay()? * self.dsp_rate_sps as f64 / self.input_rate_sps as f64,
            None => 0.0,
        };
        Some(aa + self.bands[i].linear_phase_delay()?)
    }

    fn table(&self, i: usize, band: &BandConfig) -> Result<Option<DelayCalibrationTable>> {
        Ok(match band.calibration {
            CalibrationMode::None | CalibrationMode::IirMeasured => None,
            CalibrationMode::FirConstant => {
                let d = self
                    .linear_phase_delay(i)
                    .ok_or_else(|| Error::config(format!("band {}: chain is not linear phase", band.name)))?;
                Some(DelayCalibrationTable::fir_constant(band.id, d))
            }
            CalibrationMode::IirAnalytic => Some(DelayCalibrationTable::from_response(
                band.id,
                self.dsp_rate_sps as f64,
                band.lo_hz,
                band.hi_hz,
                |f| self.response(i, f),
            )?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Channel {
    Band(usize),
    Winner,
}

#[derive(Debug, Clone)]
struct TriggerSlot {
    channel: Channel,
    corrected: bool,
    trigger: Trigger,
}

pub struct Pipeline {
    cfg: PipelineConfig,
    chain: DesignedChain,
    aa: Option<Filter>,
    decimator: Decimator,
    bank: FilterBank,
    estimators: Vec<ZeroCrossingEstimator>,
    tables: Vec<Option<DelayCalibrationTable>>,
    center_periods: Vec<u32>,
    /// Previous and latest half-period per band.
    halves: Vec<(u32, u32)>,
    detectors: Vec<Detector>,
    winner: Option<WinnerState>,
    triggers: Vec<TriggerSlot>,
    input_n: i64,
    dsp_n: i64,
    calibration_macs: u64,
    // per-frame state
    dsp_input: SampleQ14,
    outputs: Vec<SampleQ14>,
    estimates: Vec<CorrectedEstimate>,
    detected: Vec<bool>,
    edges: Vec<DetectorEdge>,
    pulses: Vec<TriggerEvent>,
    magnitudes: Vec<SampleQ14>,
}

impl Pipeline {
    pub fn new(cfg: &PipelineConfig) -> Result<Self> {
        Self::with_tables(cfg, vec![])
    }

    /// Builds the pipeline, using `tables` (matched by band id) in place of
    /// computed ones. Bands configured for measured calibration need one.
    pub fn with_tables(cfg: &PipelineConfig, tables: Vec<DelayCalibrationTable>) -> Result<Self> {
        let chain = DesignedChain::design(cfg)?;
        let dsp = chain.dsp_rate_sps;
        let aa = chain.anti_alias.as_ref().map(|a| a.runtime(cfg.rounding, cfg.input_rate_sps));
        let bank = FilterBank::new(
            cfg.bands
                .iter()
                .zip(&chain.bands)
                .map(|(b, d)| (b.id, d.runtime(cfg.rounding, dsp)))
                .collect(),
            cfg.bank.spacing,
        )?;
        // the bank orders bands by id; keep everything else in that order
        let mut order: Vec<usize> = (0..cfg.bands.len()).collect();
        order.sort_by_key(|&i| cfg.bands[i].id);
        let mut sorted = cfg.clone();
        sorted.bands = order.iter().map(|&i| cfg.bands[i].clone()).collect();
        let chain = DesignedChain {
            bands: order.iter().map(|&i| chain.bands[i].clone()).collect(),
            ..chain
        };

        let mut band_tables = vec![];
        for (i, b) in sorted.bands.iter().enumerate() {
            let given = tables.iter().find(|t| t.band_id == b.id).cloned();
            let t = match (given, b.calibration) {
                (_, CalibrationMode::None) => None,
                (Some(t), _) => Some(t),
                (None, CalibrationMode::IirMeasured) => {
                    return Err(Error::config(format!("band {} needs a measured calibration table", b.name)))
                }
                (None, _) => chain.table(i, b)?,
            };
            band_tables.push(t);
        }

        let detectors = sorted
            .bands
            .iter()
            .map(|b| Detector::new(b.id, b.detector))
            .collect::<Result<Vec<_>>>()?;
        let center_periods = sorted
            .bands
            .iter()
            .map(|b| 2 * ((dsp as f64 / b.center_hz() / 2.0).round() as u32).max(1))
            .collect::<Vec<_>>();
        let winner = (sorted.bank.spacing == Spacing::Dense).then(|| {
            let mid = center_periods[center_periods.len() / 2];
            WinnerState::new(sorted.bands.len(), sorted.bank.winner_tau_samples.unwrap_or(mid))
        });

        let mut triggers = vec![];
        for t in &sorted.triggers {
            let channel = if t.band == WINNER_CHANNEL {
                Channel::Winner
            } else {
                Channel::Band(sorted.bands.iter().position(|b| b.id == t.band).expect("validated"))
            };
            let mode = match t.target {
                TriggerTarget::Phase { degrees } => TriggerMode::Phase {
                    target_mdeg: ((degrees * 1000.0).round() as u32) % 360_000,
                },
                TriggerTarget::DelayAfterRising { ms } => TriggerMode::DelayAfterRising {
                    delay_samples: (ms * dsp as f64 / 1000.0).round() as u32,
                },
                TriggerTarget::DelayAfterFalling { ms } => TriggerMode::DelayAfterFalling {
                    delay_samples: (ms * dsp as f64 / 1000.0).round() as u32,
                },
            };
            let spec = TriggerSpec {
                spec_id: t.id,
                band_id: t.band,
                mode,
                max_pulses: t.max_pulses,
                window_samples: t.window_s.map_or(u64::MAX, |w| (w * dsp as f64).round() as u64),
                arm_sample: (t.arm_s * dsp as f64).round() as i64,
                rearm: t.rearm,
            };
            triggers.push(TriggerSlot {
                channel,
                corrected: t.corrected,
                trigger: Trigger::new(spec)?,
            });
        }

        let n = sorted.bands.len();
        Ok(Self {
            estimators: (0..n).map(|_| ZeroCrossingEstimator::new(sorted.estimator)).collect(),
            decimator: Decimator::new(sorted.decimation),
            cfg: sorted,
            chain,
            aa,
            bank,
            tables: band_tables,
            halves: vec![(0, 0); center_periods.len()],
            center_periods,
            detectors,
            winner,
            triggers,
            input_n: 0,
            dsp_n: 0,
            calibration_macs: 0,
            dsp_input: 0,
            outputs: vec![0; n],
            estimates: vec![CorrectedEstimate::default(); n],
            detected: vec![false; n],
            edges: vec![],
            pulses: vec![],
            magnitudes: vec![0; n],
        })
    }

    /// The configuration with bands ordered by id.
    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn chain(&self) -> &DesignedChain {
        &self.chain
    }

    pub fn tables(&self) -> &[Option<DelayCalibrationTable>] {
        &self.tables
    }

    pub fn dsp_index(&self) -> i64 {
        self.dsp_n - 1
    }

    pub fn dsp_input(&self) -> SampleQ14 {
        self.dsp_input
    }

    pub fn band_outputs(&self) -> &[SampleQ14] {
        &self.outputs
    }

    pub fn estimates(&self) -> &[CorrectedEstimate] {
        &self.estimates
    }

    pub fn detected(&self) -> &[bool] {
        &self.detected
    }

    pub fn edges(&self) -> &[DetectorEdge] {
        &self.edges
    }

    pub fn pulses(&self) -> &[TriggerEvent] {
        &self.pulses
    }

    /// Index of the winning band in a dense bank.
    pub fn winner(&self) -> Option<usize> {
        self.winner.as_ref().map(WinnerState::winner)
    }

    /// Feeds one input sample. Returns true when a decimated frame was
    /// produced; the accessors then describe that frame.
    pub fn tick(&mut self, x: SampleQ14) -> bool {
        self.input_n += 1;
        let y = match &mut self.aa {
            Some(f) => f.tick(x),
            None => x,
        };
        let Some(d) = self.decimator.tick(y) else {
            return false;
        };
        let n = self.dsp_n;
        self.dsp_n += 1;
        self.dsp_input = d;
        self.outputs.copy_from_slice(self.bank.tick(d));
        self.edges.clear();
        self.pulses.clear();

        for i in 0..self.outputs.len() {
            let raw = self.estimators[i].tick(self.outputs[i], n);
            self.estimates[i] = self.correct(i, &raw);
            self.magnitudes[i] = if raw.valid { raw.magnitude } else { 0 };
            let out = self.detectors[i].tick(raw.valid.then_some(raw.magnitude), n);
            self.detected[i] = out.detected;
            if let Some(e) = out.edge {
                self.edges.push(e);
            }
        }
        if let Some(w) = &mut self.winner {
            w.tick(&self.magnitudes);
        }
        let winner = self.winner();

        for slot in &mut self.triggers {
            let Some(i) = (match slot.channel {
                Channel::Band(i) => Some(i),
                Channel::Winner => winner,
            }) else {
                continue;
            };
            let onset = self
                .edges
                .iter()
                .any(|e| matches!(e, DetectorEdge::Onset(ev) if ev.band_id == self.cfg.bands[i].id));
            if onset && slot.trigger.spec().rearm == RearmPolicy::OnEvent {
                slot.trigger.rearm(n);
            }
            let est = if slot.corrected {
                self.estimates[i]
            } else {
                CorrectedEstimate::uncorrected(self.estimates[i].raw)
            };
            if let Some(p) = slot.trigger.tick(&est, self.detected[i], n) {
                self.pulses.push(p);
            }
        }
        true
    }

    fn correct(&mut self, i: usize, raw: &FeatureEstimate) -> CorrectedEstimate {
        let Some(table) = &self.tables[i] else {
            return CorrectedEstimate::uncorrected(*raw);
        };
        let period = match self.cfg.bank.table_index {
            TableIndex::RunningPeriod => raw.period_samples,
            TableIndex::BandCenter => self.center_periods[i],
            TableIndex::FullPeriod => {
                let h = &mut self.halves[i];
                if raw.crossing.is_some() && raw.period_samples > 0 {
                    *h = (h.1, raw.period_samples / 2);
                }
                if h.0 == 0 {
                    raw.period_samples
                } else {
                    h.0 + h.1
                }
            }
        };
        if raw.valid {
            self.calibration_macs += 1;
        }
        apply_correction_at(raw, table, period)
    }

    pub fn mac_report(&self) -> MacReport {
        let mut entries = vec![];
        if let Some(aa) = &self.aa {
            entries.push(MacEntry {
                stage: "anti-alias".into(),
                macs: aa.macs(),
            });
        }
        entries.push(MacEntry {
            stage: "band filters".into(),
            macs: self.bank.macs(),
        });
        entries.push(MacEntry {
            stage: "estimators".into(),
            macs: self.estimators.iter().map(|e| e.macs()).sum(),
        });
        if let Some(w) = &self.winner {
            entries.push(MacEntry {
                stage: "winner".into(),
                macs: w.macs(),
            });
        }
        entries.push(MacEntry {
            stage: "detectors".into(),
            macs: self.detectors.iter().map(|d| d.macs()).sum(),
        });
        entries.push(MacEntry {
            stage: "calibration".into(),
            macs: self.calibration_macs,
        });
        MacReport {
            entries,
            input_samples: self.input_n as u64,
            dsp_samples: self.dsp_n as u64,
            input_rate_sps: self.cfg.input_rate_sps,
        }
    }

    /// Runs a whole recording and records every per-sample signal.
    pub fn run(&mut self, x: &TimeSeries) -> Result<PipelineTrace> {
        if x.rate_sps != self.cfg.input_rate_sps {
            return Err(Error::RateMismatch {
                expected: self.cfg.input_rate_sps,
                actual: x.rate_sps,
            });
        }
        let frames = x.len() / self.cfg.decimation as usize + 1;
        let mut trace = PipelineTrace {
            dsp_rate_sps: self.chain.dsp_rate_sps,
            decimation: self.cfg.decimation,
            dsp_input: Vec::with_capacity(frames),
            bands: self
                .cfg
                .bands
                .iter()
                .map(|b| BandTrace::with_capacity(b.id, &b.name, frames))
                .collect(),
            winner: vec![],
            events: vec![],
            pulses: vec![],
            macs: MacReport::default(),
        };
        let mut open: Vec<Option<OscillationEvent>> = vec![None; self.cfg.bands.len()];
        for &s in &x.samples {
            if !self.tick(s) {
                continue;
            }
            trace.dsp_input.push(self.dsp_input);
            for (i, bt) in trace.bands.iter_mut().enumerate() {
                let e = &self.estimates[i];
                bt.output.push(self.outputs[i]);
                bt.magnitude.push(e.raw.magnitude);
                bt.period.push(e.raw.period_samples);
                bt.raw_phase_mdeg.push(e.raw.phase_mdeg);
                bt.phase_mdeg.push(e.phase_mdeg);
                bt.valid.push(e.raw.valid);
                bt.clamped.push(e.clamped);
                bt.detected.push(self.detected[i]);
            }
            if let Some(w) = self.winner() {
                trace.winner.push(w as u32);
            }
            for e in &self.edges {
                match *e {
                    DetectorEdge::Onset(ev) => {
                        let i = self.band_index(ev.band_id);
                        open[i] = Some(ev);
                    }
                    DetectorEdge::Offset(ev) => {
                        let i = self.band_index(ev.band_id);
                        open[i] = None;
                        trace.events.push(ev);
                    }
                }
            }
            trace.pulses.extend_from_slice(&self.pulses);
        }
        trace.events.extend(open.into_iter().flatten());
        trace.events.sort_by_key(|e| (e.onset_sample, e.band_id));
        trace.macs = self.mac_report();
        Ok(trace)
    }

    fn band_index(&self, id: u32) -> usize {
        self.cfg.bands.iter().position(|b| b.id == id).expect("known band")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BandTrace {
    pub band_id: u32,
    pub name: String,
    pub output: Vec<SampleQ14>,
    pub magnitude: Vec<SampleQ14>,
    pub period: Vec<u32>,
    pub raw_phase_mdeg: Vec<u32>,
    pub phase_mdeg: Vec<u32>,
    pub valid: Vec<bool>,
    pub clamped: Vec<bool>,
    pub detected: Vec<bool>,
}

impl BandTrace {
    fn with_capacity(band_id: u32, name: &str, n: usize) -> Self {
        Self {
            band_id,
            name: name.into(),
            output: Vec::with_capacity(n),
            magnitude: Vec::with_capacity(n),
            period: Vec::with_capacity(n),
            raw_phase_mdeg: Vec::with_capacity(n),
            phase_mdeg: Vec::with_capacity(n),
            valid: Vec::with_capacity(n),
            clamped: Vec::with_capacity(n),
            detected: Vec::with_capacity(n),
        }
    }

    /// Writes `sample_index,output,magnitude,period_samples,raw_phase_mdeg,phase_mdeg,valid,detected`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record([
            "sample_index",
            "output",
            "magnitude",
            "period_samples",
            "raw_phase_mdeg",
            "phase_mdeg",
            "valid",
            "detected",
        ])?;
        for k in 0..self.output.len() {
            wr.write_record([
                k.to_string(),
                self.output[k].to_string(),
                self.magnitude[k].to_string(),
                self.period[k].to_string(),
                self.raw_phase_mdeg[k].to_string(),
                self.phase_mdeg[k].to_string(),
                (self.valid[k] as u8).to_string(),
                (self.detected[k] as u8).to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineTrace {
    pub dsp_rate_sps: u32,
    pub decimation: u32,
    /// Anti-aliased, decimated input.
    pub dsp_input: Vec<SampleQ14>,
    pub bands: Vec<BandTrace>,
    /// Winning band index per sample; empty for wide banks.
    pub winner: Vec<u32>,
    pub events: Vec<OscillationEvent>,
    pub pulses: Vec<TriggerEvent>,
    pub macs: MacReport,
}

impl PipelineTrace {
    pub fn band(&self, id: u32) -> Option<&BandTrace> {
        self.bands.iter().find(|b| b.band_id == id)
    }
}

/// Measures each band's chain on a recording and returns calibration
/// tables. The input is compared sample-for-sample with the band output at
/// the decimated rate.
pub fn measure_tables(cfg: &PipelineConfig, x: &TimeSeries) -> Result<Vec<DelayCalibrationTable>> {
    let mut plain = cfg.clone();
    plain.triggers.clear();
    for b in &mut plain.bands {
        b.calibration = CalibrationMode::None;
    }
    let mut p = Pipeline::new(&plain)?;
    let trace = p.run(x)?;
    let d = cfg.decimation as usize;
    let input: Vec<f64> = x.samples.iter().step_by(d).map(|&v| v as f64).collect();
    let dsp = p.chain.dsp_rate_sps as f64;
    p.cfg
        .bands
        .iter()
        .zip(&trace.bands)
        .map(|(b, bt)| {
            let out: Vec<f64> = bt.output.iter().map(|&v| v as f64).collect();
            let t = measure_transfer(&input, &out, dsp, b.lo_hz / 2.0, (2.0 * b.hi_hz).min(dsp / 2.0), 24);
            DelayCalibrationTable::from_transfer(
                b.id,
                crate::calibration::CalibrationSource::IirMeasured,
                &t,
                b.lo_hz,
                b.hi_hz,
            )
        })
        .collect()
}
