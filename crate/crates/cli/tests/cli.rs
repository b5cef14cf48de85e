use std::path::Path;
use std::process::Command;

fn bsqlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bsqlab"))
}

fn run_linear_verify(dir: &Path, out: &str, seed: &str) -> std::process::Output {
    bsqlab()
        .current_dir(dir)
        .args([
            "linear-verify",
            "--config",
            "lv.toml",
            "--check",
            "--threads",
            "2",
        ])
        .args(["--seed", seed, "--out", out])
        .output()
        .unwrap()
}

#[test]
fn missing_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = bsqlab()
        .current_dir(dir.path())
        .args(["kernel-bounds", "--config", "absent.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.toml"));
}

#[test]
fn unknown_key_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "[physical]\nnuu = 1.0\n").unwrap();
    let out = bsqlab()
        .current_dir(dir.path())
        .args(["linear-verify", "--config", "bad.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nuu"));
}

#[test]
fn linear_verify_check_passes_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("lv.toml"), "").unwrap();
    for out in ["a", "b"] {
        let o = run_linear_verify(dir.path(), out, "11");
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(String::from_utf8_lossy(&o.stdout).starts_with("linear-verify: 1 checks passed"));
    }
    let a = std::fs::read(dir.path().join("a/linear-verify.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/linear-verify.csv")).unwrap();
    assert_eq!(a, b);

    let summary: serde_json::Value = serde_json::from_slice(
        &std::fs::read(dir.path().join("a/linear-verify.summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["seed"], 11);
    assert_eq!(summary["passed"], true);
    assert!(summary["e0"].as_f64().unwrap() > 0.0);
    assert!(summary["wall_clock_seconds"].as_f64().is_some());
    assert_eq!(summary["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn failed_check_exits_4_only_with_check() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("lv.toml"),
        "[linear_verify]\ntolerance = 1e-300\ntimes = [1.0]\n",
    )
    .unwrap();
    let o = run_linear_verify(dir.path(), "out", "0");
    assert_eq!(o.status.code(), Some(4));
    let o = bsqlab()
        .current_dir(dir.path())
        .args(["linear-verify", "--config", "lv.toml", "--out", "out"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn cfl_violation_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("eb.toml"),
        "[grid]\nn1 = 16\nn2 = 16\n[time]\ndt = 5.0\nt_final = 50.0\n[initial]\nepsilon = 50.0\n",
    )
    .unwrap();
    let o = bsqlab()
        .current_dir(dir.path())
        .args(["energy-balance", "--config", "eb.toml", "--out", "out"])
        .output()
        .unwrap();
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        bsq::config::Config::load(&path).unwrap_or_else(|e| panic!("{e}"));
        n += 1;
    }
    assert_eq!(n, 6);
}
