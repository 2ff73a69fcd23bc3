use std::process::Command;

fn sirb() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sirb"))
}

#[test]
fn simulate_subcommand_writes_output() {
    let dir = tempfile::tempdir().unwrap();
    let status = sirb()
        .args(["simulate", "--seed", "9", "--replicas", "2", "--workers", "1", "--out"])
        .arg(dir.path())
        .env("RUST_LOG", "warn")
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("replica_0001/trajectory.csv").exists());
}

#[test]
fn bad_config_exits_nonzero_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[params]\np_out = 1.3\n").unwrap();
    let out = sirb().args(["pde", "--config"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("params.p_out"), "{err}");
}

#[test]
fn regime_flag_is_checked_against_the_ladder() {
    let dir = tempfile::tempdir().unwrap();
    let out = sirb()
        .args(["converge", "--mode", "theorem2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    // the default ladder has H = K, which is outside the second regime
    assert!(!out.status.success());
    let bad = sirb().args(["simulate", "--mode", "theorem1", "--out"]).arg(dir.path()).output().unwrap();
    assert!(!bad.status.success());
}
