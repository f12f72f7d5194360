#![allow(dead_code)]

use oscdet::config::PipelineConfig;
use oscdet::pipeline::Pipeline;
use oscdet::synth::{generate, Dataset, DatasetSpec};
use oscdet::validate::trace_bytes;
use sha2::{Digest, Sha256};

pub const GOLDEN_SEED: u64 = 11;
pub const GOLDEN_SECONDS: f64 = 20.0;

pub fn golden_dataset() -> Dataset {
    generate(&DatasetSpec {
        seed: GOLDEN_SEED,
        duration_s: GOLDEN_SECONDS,
        ..DatasetSpec::default()
    })
    .unwrap()
}

/// Hex SHA-256 of the signal and every trace of each named profile.
pub fn golden_checksums() -> Vec<(String, String)> {
    let data = golden_dataset();
    let hex = |b: &[u8]| {
        Sha256::digest(b)
            .iter()
            .map(|x| format!("{x:02x}"))
            .collect::<String>()
    };
    let mut sig = vec![];
    for s in &data.signal.samples {
        sig.extend_from_slice(&(*s as i16).to_le_bytes());
    }
    let mut out = vec![("signal".to_string(), hex(&sig))];
    let profiles = [
        ("workstation", PipelineConfig::workstation()),
        ("embedded", PipelineConfig::embedded()),
        ("workstation_fir", PipelineConfig::workstation_fir()),
        ("dense", PipelineConfig::dense(8.0, 13)),
    ];
    for (name, cfg) in profiles {
        let trace = Pipeline::new(&cfg).unwrap().run(&data.signal).unwrap();
        out.push((name.to_string(), hex(&trace_bytes(&trace).unwrap())));
    }
    out
}

pub fn golden_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/trace_sha256.txt")
}

pub fn read_golden() -> Option<Vec<(String, String)>> {
    let text = std::fs::read_to_string(golden_path()).ok()?;
    Some(
        text.lines()
            .filter_map(|l| l.split_once(' '))
            .map(|(a, b)| (a.to_string(), b.trim().to_string()))
            .collect(),
    )
}
