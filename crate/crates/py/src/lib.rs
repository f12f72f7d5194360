//! Python bindings. Samples cross the boundary as lists of ints.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use oscdet::calibration::correction_mdeg;
use oscdet::config::PipelineConfig;
use oscdet::estimator::{EstimatorConfig, FeatureEstimate, ZeroCrossingEstimator};
use oscdet::pipeline::{Pipeline, PipelineTrace};
use oscdet::synth::{generate, DatasetSpec, ToneAnnotation};
use oscdet::validate::{mac_criterion, report_criteria, validate};
use oscdet::{Error, TimeSeries};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Pipeline configuration; build one from a profile or from TOML.
#[pyclass(name = "PipelineConfig", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: PipelineConfig,
}

#[pymethods]
impl PyConfig {
    #[staticmethod]
    fn workstation() -> Self {
        Self { inner: PipelineConfig::workstation() }
    }

    #[staticmethod]
    fn embedded() -> Self {
        Self { inner: PipelineConfig::embedded() }
    }

    #[staticmethod]
    fn workstation_fir() -> Self {
        Self { inner: PipelineConfig::workstation_fir() }
    }

    #[staticmethod]
    fn dense(lo_hz: f64, count: usize) -> Self {
        Self { inner: PipelineConfig::dense(lo_hz, count) }
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        PipelineConfig::from_toml(text).map(|inner| Self { inner }).map_err(py_err)
    }

    fn to_toml(&self) -> PyResult<String> {
        self.inner.to_toml().map_err(py_err)
    }

    #[getter]
    fn band_names(&self) -> Vec<String> {
        self.inner.bands.iter().map(|b| b.name.clone()).collect()
    }

    #[getter]
    fn input_rate_sps(&self) -> u32 {
        self.inner.input_rate_sps
    }

    #[getter]
    fn dsp_rate_sps(&self) -> u32 {
        self.inner.dsp_rate_sps()
    }
}

#[pyclass(name = "BandTrace", skip_from_py_object)]
struct PyBandTrace {
    #[pyo3(get)]
    band_id: u32,
    #[pyo3(get)]
    name: String,
    #[pyo3(get)]
    output: Vec<i32>,
    #[pyo3(get)]
    magnitude: Vec<i32>,
    #[pyo3(get)]
    period: Vec<u32>,
    #[pyo3(get)]
    raw_phase_mdeg: Vec<u32>,
    #[pyo3(get)]
    phase_mdeg: Vec<u32>,
    #[pyo3(get)]
    valid: Vec<bool>,
    #[pyo3(get)]
    detected: Vec<bool>,
}

/// Output of a whole-recording run.
#[pyclass(name = "Trace", skip_from_py_object)]
struct PyTrace {
    inner: PipelineTrace,
}

#[pymethods]
impl PyTrace {
    #[getter]
    fn dsp_rate_sps(&self) -> u32 {
        self.inner.dsp_rate_sps
    }

    #[getter]
    fn bands(&self) -> Vec<PyBandTrace> {
        self.inner
            .bands
            .iter()
            .map(|b| PyBandTrace {
                band_id: b.band_id,
                name: b.name.clone(),
                output: b.output.clone(),
                magnitude: b.magnitude.clone(),
                period: b.period.clone(),
                raw_phase_mdeg: b.raw_phase_mdeg.clone(),
                phase_mdeg: b.phase_mdeg.clone(),
                valid: b.valid.clone(),
                detected: b.detected.clone(),
            })
            .collect()
    }

    /// `(band_id, onset, asserted, offset or None, peak_magnitude)` per event.
    #[getter]
    fn events(&self) -> Vec<(u32, i64, i64, Option<i64>, i32)> {
        self.inner
            .events
            .iter()
            .map(|e| (e.band_id, e.onset_sample, e.asserted_sample, e.offset_sample, e.peak_magnitude))
            .collect()
    }

    /// `(fire_sample, band_id, spec_id, achieved_phase_mdeg)` per pulse.
    #[getter]
    fn pulses(&self) -> Vec<(i64, u32, u32, u32)> {
        self.inner
            .pulses
            .iter()
            .map(|p| (p.fire_sample, p.band_id, p.spec_id, p.achieved_phase_mdeg))
            .collect()
    }

    #[getter]
    fn winner(&self) -> Vec<u32> {
        self.inner.winner.clone()
    }

    /// `(stage, macs)` pairs.
    #[getter]
    fn macs(&self) -> Vec<(String, u64)> {
        self.inner.macs.entries.iter().map(|e| (e.stage.clone(), e.macs)).collect()
    }

    #[getter]
    fn macs_per_dsp_sample(&self) -> f64 {
        self.inner.macs.per_dsp_sample()
    }
}

/// The streaming pipeline. Feed samples one at a time with `tick` or a
/// whole recording with `run`.
#[pyclass(name = "Pipeline", skip_from_py_object)]
struct PyPipeline {
    inner: Pipeline,
    cfg: PipelineConfig,
}

#[pymethods]
impl PyPipeline {
    #[new]
    fn new(config: &PyConfig) -> PyResult<Self> {
        Ok(Self {
            inner: Pipeline::new(&config.inner).map_err(py_err)?,
            cfg: config.inner.clone(),
        })
    }

    /// Feeds one full-rate sample; true when a DSP frame was produced.
    fn tick(&mut self, x: i32) -> bool {
        self.inner.tick(x)
    }

    fn band_outputs(&self) -> Vec<i32> {
        self.inner.band_outputs().to_vec()
    }

    /// Corrected phase per band in millidegrees.
    fn phases_mdeg(&self) -> Vec<u32> {
        self.inner.estimates().iter().map(|e| e.phase_mdeg).collect()
    }

    fn detected(&self) -> Vec<bool> {
        self.inner.detected().to_vec()
    }

    /// Runs a fresh copy of this pipeline over `samples`.
    fn run(&self, samples: Vec<i32>) -> PyResult<PyTrace> {
        let x = TimeSeries::from_checked(self.cfg.input_rate_sps, samples).map_err(py_err)?;
        let mut p = Pipeline::new(&self.cfg).map_err(py_err)?;
        p.run(&x).map(|inner| PyTrace { inner }).map_err(py_err)
    }
}

/// The zero-crossing estimator on its own.
#[pyclass(name = "ZeroCrossingEstimator", skip_from_py_object)]
struct PyEstimator {
    inner: ZeroCrossingEstimator,
}

#[pymethods]
impl PyEstimator {
    #[new]
    #[pyo3(signature = (min_crossing_gap = 2, half_sample_anchor = true))]
    fn new(min_crossing_gap: u32, half_sample_anchor: bool) -> Self {
        Self {
            inner: ZeroCrossingEstimator::new(EstimatorConfig {
                min_crossing_gap,
                half_sample_anchor,
            }),
        }
    }

    /// Returns `(magnitude, period_samples, phase_mdeg, valid)`.
    fn tick(&mut self, x: i32, n: i64) -> (i32, u32, u32, bool) {
        let FeatureEstimate {
            magnitude,
            period_samples,
            phase_mdeg,
            valid,
            ..
        } = self.inner.tick(x, n);
        (magnitude, period_samples, phase_mdeg, valid)
    }
}

/// A synthetic recording.
#[pyclass(name = "Dataset", skip_from_py_object)]
struct PyDataset {
    #[pyo3(get)]
    rate_sps: u32,
    #[pyo3(get)]
    signal: Vec<i32>,
    tones: Vec<ToneAnnotation>,
}

#[pymethods]
impl PyDataset {
    /// `(band, f0_hz, onset_sample, offset_sample, amplitude)` per tone.
    #[getter]
    fn tones(&self) -> Vec<(String, f64, i64, i64, f64)> {
        self.tones
            .iter()
            .map(|t| (t.band.clone(), t.f0_hz, t.onset_sample, t.offset_sample, t.amplitude))
            .collect()
    }
}

#[pyfunction]
#[pyo3(signature = (seed = 1, duration_s = 300.0, degraded = false))]
fn synth(seed: u64, duration_s: f64, degraded: bool) -> PyResult<PyDataset> {
    let base = if degraded {
        DatasetSpec::second_profile(seed)
    } else {
        DatasetSpec { seed, ..DatasetSpec::default() }
    };
    let data = generate(&DatasetSpec { duration_s, ..base }).map_err(py_err)?;
    Ok(PyDataset {
        rate_sps: data.signal.rate_sps,
        signal: data.signal.samples,
        tones: data.tones,
    })
}

/// Runs the validation suite; returns `(criteria, report_json)` where each
/// criterion is `(id, name, passed, detail)`.
#[pyfunction]
#[pyo3(signature = (config, seed = 1, duration_s = 300.0))]
fn run_validation(
    py: Python<'_>,
    config: &PyConfig,
    seed: u64,
    duration_s: f64,
) -> PyResult<(Vec<(u8, String, bool, String)>, String)> {
    let cfg = config.inner.clone();
    let result = py.detach(move || -> oscdet::Result<_> {
        let default = generate(&DatasetSpec { seed, duration_s, ..DatasetSpec::default() })?;
        let degraded = generate(&DatasetSpec { duration_s, ..DatasetSpec::second_profile(seed) })?;
        let (a, _) = validate(&cfg, &default)?;
        let (b, _) = validate(&cfg, &degraded)?;
        let bench = Pipeline::new(&PipelineConfig::embedded())?.run(&default.signal)?;
        let mut criteria = report_criteria(&a, &b);
        criteria.push(mac_criterion(&bench.macs));
        let json = serde_json::json!({ "default": a, "degraded": b }).to_string();
        Ok((criteria, json))
    });
    let (criteria, json) = result.map_err(py_err)?;
    Ok((
        criteria.into_iter().map(|c| (c.id, c.name, c.pass, c.detail)).collect(),
        json,
    ))
}

/// Phase advance in millidegrees for a delay of `delay_sixteenths` at
/// `period_samples`.
#[pyfunction(name = "correction_mdeg")]
fn py_correction_mdeg(delay_sixteenths: u32, period_samples: u32) -> u32 {
    correction_mdeg(delay_sixteenths, period_samples)
}

#[pymodule(name = "oscdet")]
fn oscdet_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyPipeline>()?;
    m.add_class::<PyTrace>()?;
    m.add_class::<PyBandTrace>()?;
    m.add_class::<PyEstimator>()?;
    m.add_class::<PyDataset>()?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(run_validation, m)?)?;
    m.add_function(wrap_pyfunction!(py_correction_mdeg, m)?)?;
    Ok(())
}
