//! Synthetic benchmark recordings: red background noise with tapered tone
//! bursts at a fixed local signal-to-noise ratio.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::signal::{TimeSeries, FULL_SCALE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToneBand {
    pub name: String,
    pub lo_hz: f64,
    pub hi_hz: f64,
}

impl ToneBand {
    fn new(name: &str, lo_hz: f64, hi_hz: f64) -> Self {
        Self {
            name: name.into(),
            lo_hz,
            hi_hz,
        }
    }
}

/// Tone bands of the benchmark recordings.
pub fn default_tone_bands() -> Vec<ToneBand> {
    vec![
        ToneBand::new("theta", 4.0, 7.0),
        ToneBand::new("alpha", 7.0, 12.0),
        ToneBand::new("beta", 12.0, 21.0),
        ToneBand::new("low-gamma", 21.0, 36.0),
        ToneBand::new("mid-gamma", 36.0, 63.0),
        ToneBand::new("high-gamma", 63.0, 108.0),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSpec {
    pub seed: u64,
    pub rate_sps: u32,
    pub duration_s: f64,
    /// RMS of the background noise in counts.
    pub noise_rms: f64,
    pub noise_lo_hz: f64,
    pub noise_hi_hz: f64,
    pub bands: Vec<ToneBand>,
    /// Tone power over noise power in the tone's band and time window.
    pub snr_db: f64,
    /// Tone length between taper midpoints, in periods.
    pub min_periods: f64,
    pub max_periods: f64,
    /// Each taper flank as a fraction of the whole tone window.
    pub taper_fraction: f64,
    /// Largest relative frequency change over a tone.
    pub max_chirp: f64,
    /// Largest relative amplitude change over a tone.
    pub max_ramp: f64,
    pub gap_mean_s: f64,
    pub gap_min_s: f64,
    /// Quiet lead-in before the first tone of each band.
    pub lead_in_s: f64,
    /// Minimum number of overlapping tone pairs from different bands in
    /// every minute of the recording.
    pub overlaps_per_minute: u32,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            seed: 1,
            rate_sps: 2500,
            duration_s: 300.0,
            noise_rms: FULL_SCALE as f64 / 12.0,
            noise_lo_hz: 2.0,
            noise_hi_hz: 200.0,
            bands: default_tone_bands(),
            snr_db: 20.0,
            min_periods: 3.0,
            max_periods: 5.0,
            taper_fraction: 0.25,
            max_chirp: 0.05,
            max_ramp: 0.10,
            gap_mean_s: 3.0,
            gap_min_s: 1.0,
            lead_in_s: 2.0,
            overlaps_per_minute: 0,
        }
    }
}

impl DatasetSpec {
    /// Harder variant: 10 dB tones, 10% chirp and forced cross-band overlap.
    pub fn second_profile(seed: u64) -> Self {
        Self {
            seed,
            snr_db: 10.0,
            max_chirp: 0.10,
            overlaps_per_minute: 1,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nyq = self.rate_sps as f64 / 2.0;
        let bad = |m: &str| Err(Error::config(format!("dataset: {m}")));
        if self.rate_sps == 0 || !(self.duration_s > 0.0) {
            return bad("rate and duration must be positive");
        }
        if !(0.0 < self.noise_lo_hz && self.noise_lo_hz < self.noise_hi_hz && self.noise_hi_hz < nyq) {
            return bad("noise band must satisfy 0 < lo < hi < Nyquist");
        }
        if !(self.noise_rms >= 0.0 && self.noise_rms < FULL_SCALE as f64) {
            return bad("noise rms out of range");
        }
        for b in &self.bands {
            if !(0.0 < b.lo_hz && b.lo_hz < b.hi_hz && b.hi_hz < nyq) {
                return bad(&format!("band {} has invalid edges", b.name));
            }
        }
        if !(0.0 < self.min_periods && self.min_periods <= self.max_periods) {
            return bad("tone length range is empty");
        }
        if !(0.0 < self.taper_fraction && self.taper_fraction < 0.5) {
            return bad("taper fraction must be in (0, 0.5)");
        }
        if !(0.0..1.0).contains(&self.max_chirp) || !(0.0..1.0).contains(&self.max_ramp) {
            return bad("chirp and ramp must be in [0, 1)");
        }
        if !(self.gap_min_s >= 0.0 && self.gap_mean_s >= self.gap_min_s) {
            return bad("gap mean must be at least the minimum gap");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToneAnnotation {
    pub band: String,
    /// Frequency at the onset midpoint.
    pub f0_hz: f64,
    /// Midpoint of the rising taper, in samples.
    pub onset_sample: i64,
    /// Midpoint of the falling taper, in samples.
    pub offset_sample: i64,
    /// Peak amplitude at the onset midpoint, in counts.
    pub amplitude: f64,
    /// Relative frequency change from onset to offset.
    pub chirp: f64,
    /// Relative amplitude change from onset to offset.
    pub ramp: f64,
    /// Sine phase at the onset midpoint, in radians.
    pub phase0_rad: f64,
    pub start_sample: i64,
    pub end_sample: i64,
}

impl ToneAnnotation {
    pub fn duration_periods(&self, rate_sps: f64) -> f64 {
        (self.offset_sample - self.onset_sample) as f64 * self.f0_hz / rate_sps
    }

    /// Instantaneous frequency at sample `n`.
    pub fn frequency_at(&self, n: i64) -> f64 {
        let d = (self.offset_sample - self.onset_sample) as f64;
        self.f0_hz * (1.0 + self.chirp * (n - self.onset_sample) as f64 / d)
    }

    /// Floating-point waveform over `start_sample..end_sample`.
    pub fn waveform(&self, rate_sps: f64) -> Vec<f64> {
        let d = (self.offset_sample - self.onset_sample) as f64;
        let len = (self.end_sample - self.start_sample) as usize;
        let flank = (self.onset_sample - self.start_sample) as f64 * 2.0;
        (0..len)
            .map(|u| {
                let taper = if (u as f64) < flank {
                    0.5 * (1.0 - (PI * (u as f64 + 0.5) / flank).cos())
                } else if ((len - 1 - u) as f64) < flank {
                    0.5 * (1.0 - (PI * ((len - 1 - u) as f64 + 0.5) / flank).cos())
                } else {
                    1.0
                };
                let t = (self.start_sample + u as i64 - self.onset_sample) as f64;
                let frac = t / d;
                let phase = self.phase0_rad
                    + 2.0 * PI * self.f0_hz * (t + self.chirp * t * t / (2.0 * d)) / rate_sps;
                self.amplitude * (1.0 + self.ramp * frac) * taper * phase.sin()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub spec: DatasetSpec,
    pub signal: TimeSeries,
    /// Integer background noise; equal to `signal` wherever no tone plays.
    pub noise: Vec<i32>,
    pub tones: Vec<ToneAnnotation>,
}

/// Red noise with a `1/f` amplitude spectrum between `lo_hz` and `hi_hz`,
/// scaled to `rms`.
pub fn red_noise(rng: &mut ChaCha8Rng, n: usize, rate_sps: f64, lo_hz: f64, hi_hz: f64, rms: f64) -> Vec<f64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let df = rate_sps / n as f64;
    for k in 1..n.div_ceil(2) {
        let f = k as f64 * df;
        let phase: f64 = rng.random_range(0.0..2.0 * PI);
        if f < lo_hz || f > hi_hz {
            continue;
        }
        let v = Complex64::from_polar(1.0 / f, phase);
        buf[k] = v;
        buf[n - k] = v.conj();
    }
    fft::inverse(&mut buf);
    let x: Vec<f64> = buf.into_iter().map(|v| v.re).collect();
    let cur = (x.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    let scale = if cur > 0.0 { rms / cur } else { 0.0 };
    x.into_iter().map(|v| v * scale).collect()
}

fn band_limited(spectrum: &[Complex64], rate_sps: f64, lo: f64, hi: f64) -> Vec<f64> {
    let n = spectrum.len();
    let mut buf: Vec<Complex64> = spectrum
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let f = fft::bin_freq(k, n) * rate_sps;
            if f >= lo && f <= hi {
                v
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    fft::inverse(&mut buf);
    buf.into_iter().map(|v| v.re).collect()
}

fn mean_square(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64
}

struct Placer<'a> {
    spec: &'a DatasetSpec,
    rate: f64,
    noise: &'a [i32],
    band_noise: &'a [Vec<f64>],
    sum: Vec<f64>,
    tones: Vec<ToneAnnotation>,
}

impl Placer<'_> {
    /// Draws a tone in band `bi` whose onset midpoint is at `onset`.
    fn draw(&self, rng: &mut ChaCha8Rng, bi: usize, onset: i64) -> Option<ToneAnnotation> {
        let s = self.spec;
        let band = &s.bands[bi];
        let f0 = rng.random_range(band.lo_hz..=band.hi_hz);
        let periods = rng.random_range(s.min_periods..=s.max_periods);
        let chirp = rng.random_range(-s.max_chirp..=s.max_chirp);
        let ramp = rng.random_range(-s.max_ramp..=s.max_ramp);
        let phase0 = rng.random_range(0.0..2.0 * PI);
        let d = (periods * self.rate / f0).round() as i64;
        let flank = ((d as f64) * s.taper_fraction / (1.0 - s.taper_fraction) / 2.0).round() as i64;
        let flank = flank.max(1);
        let tone = ToneAnnotation {
            band: band.name.clone(),
            f0_hz: f0,
            onset_sample: onset,
            offset_sample: onset + d,
            amplitude: 1.0,
            chirp,
            ramp,
            phase0_rad: phase0,
            start_sample: onset - flank,
            end_sample: onset + d + flank,
        };
        let n = self.noise.len() as i64;
        if tone.start_sample < 0 || tone.end_sample > n {
            return None;
        }
        // amplitude from the band noise over the onset..offset window
        let unit = tone.waveform(self.rate);
        let core = (tone.onset_sample - tone.start_sample) as usize..(tone.offset_sample - tone.start_sample) as usize;
        let p_tone = mean_square(&unit[core]);
        let p_noise = mean_square(&self.band_noise[bi][tone.onset_sample as usize..tone.offset_sample as usize]);
        let amp = (p_noise * 10f64.powf(s.snr_db / 10.0) / p_tone).sqrt();
        Some(ToneAnnotation {
            amplitude: amp,
            ..tone
        })
    }

    fn fits(&self, t: &ToneAnnotation) -> bool {
        let same_band = self.tones.iter().any(|o| {
            o.band == t.band && o.start_sample < t.end_sample + self.gap_min() && t.start_sample < o.end_sample + self.gap_min()
        });
        if same_band {
            return false;
        }
        let w = t.waveform(self.rate);
        (t.start_sample..t.end_sample).zip(&w).all(|(i, v)| {
            let i = i as usize;
            let total = self.noise[i] as i64 + (self.sum[i] + v).round() as i64;
            total.abs() <= FULL_SCALE as i64
        })
    }

    fn gap_min(&self) -> i64 {
        (self.spec.gap_min_s * self.rate).round() as i64
    }

    fn add(&mut self, t: ToneAnnotation) {
        for (i, v) in (t.start_sample..t.end_sample).zip(t.waveform(self.rate)) {
            self.sum[i as usize] += v;
        }
        self.tones.push(t);
    }

    fn try_place(&mut self, rng: &mut ChaCha8Rng, bi: usize, onset: i64) -> bool {
        for _ in 0..8 {
            if let Some(t) = self.draw(rng, bi, onset) {
                if self.fits(&t) {
                    self.add(t);
                    return true;
                }
            }
        }
        false
    }
}

fn overlaps(a: &ToneAnnotation, b: &ToneAnnotation) -> bool {
    a.band != b.band && a.onset_sample < b.offset_sample && b.onset_sample < a.offset_sample
}

/// Generates a recording from `spec`. The same spec always yields the same
/// samples.
pub fn generate(spec: &DatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let rate = spec.rate_sps as f64;
    let n = (spec.duration_s * rate).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let noise_f = red_noise(&mut rng, n, rate, spec.noise_lo_hz, spec.noise_hi_hz, spec.noise_rms);
    let noise: Vec<i32> = noise_f
        .iter()
        .map(|v| v.round().clamp(-(FULL_SCALE as f64), FULL_SCALE as f64) as i32)
        .collect();
    let spectrum = fft::real_spectrum(&noise.iter().map(|&v| v as f64).collect::<Vec<_>>());
    let band_noise: Vec<Vec<f64>> = spec
        .bands
        .iter()
        .map(|b| band_limited(&spectrum, rate, b.lo_hz, b.hi_hz))
        .collect();

    let mut placer = Placer {
        spec,
        rate,
        noise: &noise,
        band_noise: &band_noise,
        sum: vec![0.0; n],
        tones: vec![],
    };

    let gap_extra = spec.gap_mean_s - spec.gap_min_s;
    let end_limit = n as i64 - (rate * spec.gap_min_s) as i64;
    for bi in 0..spec.bands.len() {
        let mut cursor = (spec.lead_in_s * rate) as i64;
        loop {
            let flank_guess = (rate / spec.bands[bi].lo_hz) as i64;
            let onset = cursor + flank_guess;
            if onset >= end_limit {
                break;
            }
            placer.try_place(&mut rng, bi, onset);
            let last_end = placer
                .tones
                .iter()
                .filter(|t| t.band == spec.bands[bi].name)
                .map(|t| t.end_sample)
                .max()
                .unwrap_or(cursor);
            let u: f64 = rng.random_range(0.0..1.0);
            let gap = spec.gap_min_s + if gap_extra > 0.0 { -gap_extra * (1.0 - u).ln() } else { 0.0 };
            cursor = last_end.max(onset) + (gap * rate).round() as i64;
        }
    }

    if spec.overlaps_per_minute > 0 && spec.bands.len() > 1 {
        let minute = (60.0 * rate) as i64;
        let mut m0 = 0;
        while m0 < n as i64 {
            let in_minute = |t: &ToneAnnotation| t.onset_sample >= m0 && t.onset_sample < m0 + minute;
            let mut attempts = 0;
            loop {
                let have = placer
                    .tones
                    .iter()
                    .filter(|a| in_minute(a))
                    .map(|a| placer.tones.iter().filter(|b| overlaps(a, b)).count())
                    .sum::<usize>();
                if have >= spec.overlaps_per_minute as usize || attempts >= 64 {
                    break;
                }
                attempts += 1;
                let hosts: Vec<usize> = (0..placer.tones.len()).filter(|&i| in_minute(&placer.tones[i])).collect();
                if hosts.is_empty() {
                    break;
                }
                let host = placer.tones[hosts[rng.random_range(0..hosts.len())]].clone();
                let bi = rng.random_range(0..spec.bands.len());
                if spec.bands[bi].name == host.band {
                    continue;
                }
                let span = host.offset_sample - host.onset_sample;
                let onset = host.onset_sample + rng.random_range(0..span.max(1));
                placer.try_place(&mut rng, bi, onset);
            }
            m0 += minute;
        }
    }

    let mut tones = placer.tones;
    tones.sort_by_key(|t| (t.onset_sample, t.band.clone()));
    let samples: Vec<i32> = noise
        .iter()
        .zip(&placer.sum)
        .map(|(&v, &s)| v + s.round() as i32)
        .collect();
    let signal = TimeSeries::from_checked(spec.rate_sps, samples)?;
    Ok(Dataset {
        spec: spec.clone(),
        signal,
        noise,
        tones,
    })
}

/// Writes `band,f0_hz,onset_sample,offset_sample,amplitude,chirp,ramp,phase0_rad,start_sample,end_sample`.
pub fn write_annotations_csv<W: Write>(tones: &[ToneAnnotation], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([
        "band",
        "f0_hz",
        "onset_sample",
        "offset_sample",
        "amplitude",
        "chirp",
        "ramp",
        "phase0_rad",
        "start_sample",
        "end_sample",
    ])?;
    for t in tones {
        wr.write_record([
            t.band.clone(),
            format!("{:.6}", t.f0_hz),
            t.onset_sample.to_string(),
            t.offset_sample.to_string(),
            format!("{:.4}", t.amplitude),
            format!("{:.6}", t.chirp),
            format!("{:.6}", t.ramp),
            format!("{:.6}", t.phase0_rad),
            t.start_sample.to_string(),
            t.end_sample.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
