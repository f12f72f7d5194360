//! Fixed-point oscillation detection and phase-aligned stimulation
//! triggering for local field potential signals, plus the offline tools
//! used to validate it.

pub mod design;
pub mod error;
pub mod io;
pub mod signal;

pub use error::{Error, Result};
pub use signal::{SampleQ14, StreamBlock, TimeSeries, FULL_SCALE};
pub mod filter;
pub mod estimator;
pub mod detector;
pub mod fft;
pub mod harness;
pub mod calibration;
pub mod trigger;
pub mod synth;
pub mod config;
pub mod mac;
pub mod pipeline;
pub mod validate;
