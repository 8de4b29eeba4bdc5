use std::path::Path;
use std::process::Command;

fn leafball(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_leafball")).args(args).output().unwrap()
}

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

#[test]
fn shipped_configs_parse() {
    for name in ["default.toml", "identity.toml"] {
        leafball_core::RunConfig::load(&configs().join(name)).unwrap();
    }
}

#[test]
fn identity_run_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = configs().join("identity.toml");
    let cfg = cfg.to_str().unwrap();
    let run = leafball(&["run", "--config", cfg, "--out", out]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stdout));
    assert!(String::from_utf8_lossy(&run.stdout).contains("PASS"));
    for verb in ["trace", "report", "labyrinth"] {
        let o = leafball(&[verb, "--config", cfg, "--out", out]);
        assert!(o.status.success(), "{verb}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert!(dir.path().join("plots/margins.csv").exists());
}

#[test]
fn malformed_config_exits_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "n = 2\nstages = 0\neps0 = -0.05\nseed = 0\n").unwrap();
    let o = leafball(&["run", "--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("eps0"));
}

#[test]
fn report_without_run_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("identity.toml");
    let o = leafball(&["report", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing"));
}
