use std::process::Command;

fn oscdet() -> Command {
    Command::new(env!("CARGO_BIN_EXE_oscdet"))
}

#[test]
fn synth_then_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let st = oscdet()
        .args(["--seed", "3", "--out-dir"])
        .arg(out)
        .args(["synth", "--duration", "10"])
        .status()
        .unwrap();
    assert!(st.success());
    let signal = out.join("signal.i16");
    assert_eq!(std::fs::metadata(&signal).unwrap().len(), 2 * 25_000);
    assert!(std::fs::read_to_string(out.join("annotations.csv")).unwrap().starts_with("band,"));

    let st = oscdet().arg("--out-dir").arg(out).arg("run").arg(&signal).status().unwrap();
    assert!(st.success());
    for f in ["events.csv", "pulses.csv", "macs.txt", "band-2-beta.csv"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let st = oscdet()
        .env("OSCDET_OUT_DIR", dir.path())
        .args(["--profile", "embedded", "bench", "--duration", "2"])
        .status()
        .unwrap();
    assert!(st.success());
    let text = std::fs::read_to_string(dir.path().join("macs.txt")).unwrap();
    assert!(text.contains("band filters"));
}

#[test]
fn design_exports_coefficients_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let st = oscdet().arg("--out-dir").arg(dir.path()).arg("design").status().unwrap();
    assert!(st.success());
    let coef = std::fs::read_to_string(dir.path().join("band-0-theta.coef")).unwrap();
    assert_eq!(coef.lines().count(), 2);
    assert!(dir.path().join("band-0-theta.lut").exists());
    assert!(dir.path().join("anti-alias.coef").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "input_rate_sps = \"fast\"\n").unwrap();
    let code = |args: &[&str]| {
        oscdet()
            .arg("--out-dir")
            .arg(dir.path())
            .args(args)
            .status()
            .unwrap()
            .code()
    };
    assert_eq!(code(&["--config", bad.to_str().unwrap(), "design"]), Some(2));
    assert_eq!(code(&["run", "/nonexistent/signal.i16"]), Some(3));
}

#[test]
fn validate_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let code = oscdet()
        .arg("--out-dir")
        .arg(dir.path())
        .args(["validate", "--duration", "30"])
        .status()
        .unwrap()
        .code();
    let text = std::fs::read_to_string(dir.path().join("validation.txt")).unwrap();
    let lines: Vec<&str> = text.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).collect();
    assert_eq!(lines.len(), 8);
    let all_pass = lines.iter().all(|l| l.starts_with("PASS"));
    assert_eq!(code, Some(if all_pass { 0 } else { 4 }));
    assert!(dir.path().join("validation.json").exists());
}
