//! Exit codes and outputs of the `ev` binary.

use std::path::Path;
use std::process::Command;

fn ev(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ev")).args(args).output().expect("ev runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn passing_run_exits_zero_and_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[run]\nseed = 2\n");
    let out = dir.path().join("r.json").display().to_string();
    let o = ev(&["run", "--suite", "ftpair", "--config", &cfg, "--out", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["suite"], "ftpair");
    assert_eq!(report["summary"]["pass"], true);
}

#[test]
fn assertion_failure_exits_one_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[suite.ftpair]\nidentity = 1e-30\n");
    let out = dir.path().join("r.json").display().to_string();
    let o = ev(&["run", "--suite", "ftpair", "--config", &cfg, "--out", &out]);
    assert_eq!(o.status.code(), Some(1));
    let replays = std::fs::read_dir(format!("{out}.replays")).unwrap().next().unwrap().unwrap().path();
    let again = dir.path().join("again.json").display().to_string();
    let o = ev(&["run", "--suite", "ftpair", "--config", &cfg, "--replay", &replays.display().to_string(), "--out", &again]);
    assert_eq!(o.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&again).unwrap()).unwrap();
    assert_eq!(report["trials"][0]["checks"]["replay reproduces digest"], true);
}

#[test]
fn usage_and_configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.toml", "");
    assert_eq!(ev(&["run", "--suite", "nope", "--config", &good]).status.code(), Some(2));
    assert_eq!(ev(&["run", "--config", &good]).status.code(), Some(2));
    assert_eq!(ev(&["run", "--suite", "box", "--config", "/nonexistent.toml"]).status.code(), Some(2));

    let bad = write(dir.path(), "bad.toml", "[grid]\nn = 12\n");
    let o = ev(&["run", "--suite", "box", "--config", &bad]);
    assert_eq!(o.status.code(), Some(2));
    let unknown = write(dir.path(), "unknown.toml", "[grid]\nn = 16\nwidth = 3\n");
    let o = ev(&["run", "--suite", "box", "--config", &unknown]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let base = write(dir.path(), "base.toml", "[run]\nbaseline = \"missing.toml\"\n");
    assert_eq!(ev(&["run", "--suite", "dyadic", "--config", &base]).status.code(), Some(2));
}

#[test]
fn list_names_every_suite() {
    let o = ev(&["list"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for s in ["dyadic", "kernels", "ftpair", "telescoping", "box", "error-boundary", "tree", "parseval", "restricted"] {
        assert!(text.contains(s), "{s}");
    }
}

#[test]
fn calibrate_writes_a_loadable_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[calibration]\ntrial_factor = 1\n\
        [suite.dyadic]\ntrials = 2\nexhaustive_depth = 1\n\
        [suite.telescoping]\ntrials = 1\n\
        [suite.error-boundary]\ntrials = 1\nn = 16\n\
        [suite.tree]\ntrials = 1\nn = 16\nfine_n = 32\n\
        [suite.restricted]\ntrials = 1\nn = 8\ntruncation = 1\n";
    let cfg = write(dir.path(), "c.toml", text);
    let out = dir.path().join("b.toml").display().to_string();
    let o = ev(&["calibrate", "--config", &cfg, "--out", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let b = entangled::harness::Baseline::load(Path::new(&out)).unwrap();
    assert!(b.constants.contains_key("C_bdry"));
    assert!(b.constants.contains_key("C_err"));
}
