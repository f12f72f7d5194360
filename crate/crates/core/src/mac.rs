//! Multiply-accumulate accounting.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MacEntry {
    pub stage: String,
    pub macs: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MacReport {
    pub entries: Vec<MacEntry>,
    pub input_samples: u64,
    pub dsp_samples: u64,
    pub input_rate_sps: u32,
}

impl MacReport {
    pub fn total(&self) -> u64 {
        self.entries.iter().map(|e| e.macs).sum()
    }

    /// Average MACs per decimated sample, all stages included.
    pub fn per_dsp_sample(&self) -> f64 {
        self.total() as f64 / self.dsp_samples.max(1) as f64
    }

    pub fn per_second(&self) -> f64 {
        if self.input_samples == 0 {
            return 0.0;
        }
        self.total() as f64 * self.input_rate_sps as f64 / self.input_samples as f64
    }

    pub fn stage(&self, name: &str) -> Option<u64> {
        self.entries.iter().find(|e| e.stage == name).map(|e| e.macs)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out += &format!("{:<24} {:>14}\n", e.stage, e.macs);
        }
        out += &format!("{:<24} {:>14}\n", "total", self.total());
        out += &format!("{:<24} {:>14.1}\n", "per dsp sample", self.per_dsp_sample());
        out += &format!("{:<24} {:>14.0}\n", "per second", self.per_second());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates() {
        let r = MacReport {
            entries: vec![
                MacEntry { stage: "a".into(), macs: 1000 },
                MacEntry { stage: "b".into(), macs: 500 },
            ],
            input_samples: 500,
            dsp_samples: 100,
            input_rate_sps: 2500,
        };
        assert_eq!(r.total(), 1500);
        assert_eq!(r.per_dsp_sample(), 15.0);
        assert_eq!(r.per_second(), 7500.0);
        assert_eq!(r.stage("b"), Some(500));
        assert!(r.to_text().contains("total"));
    }
}
