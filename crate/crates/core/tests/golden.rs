mod common;

use common::*;

/// Set OSCDET_BLESS=1 to rewrite the golden file after an intended change.
#[test]
fn traces_match_golden_checksums() {
    let sums = golden_checksums();
    if std::env::var_os("OSCDET_BLESS").is_some() {
        let text: String = sums.iter().map(|(n, h)| format!("{n} {h}\n")).collect();
        std::fs::write(golden_path(), text).unwrap();
        return;
    }
    let golden = read_golden().expect("golden checksum file missing");
    assert_eq!(sums, golden);
}

#[test]
fn repeated_runs_are_identical() {
    assert_eq!(golden_checksums(), golden_checksums());
}
