//! Offline measurement tools: analytic-signal reference, transfer-function
//! estimation and circular error statistics.

mod analytic;
mod stats;
mod transfer;

pub use analytic::{analytic_signal, AnalyticSignal};
pub use stats::{circular_mean_deg, error_stats, error_vs_frequency, wrap_deg, ErrorStats, FrequencyBinStats};
pub use transfer::{measure_transfer, TransferEstimate};
