//! Determinism, replay and baseline handling of the verification harness.

use std::path::Path;

use entangled::error::Error;
use entangled::harness::{self, Baseline, ConfigFile, ReplayFile, RunOptions, Suite, SuiteConfig};

fn suite(text: &str, suite: Suite) -> SuiteConfig {
    ConfigFile::parse(text, Path::new(".")).unwrap().suite_config(suite).unwrap()
}

#[test]
fn runs_are_reproducible() {
    let c = suite("[run]\nseed = 9\n[suite.dyadic]\ntrials = 5\nexhaustive_depth = 1\n", Suite::Dyadic);
    let a = harness::run_suite(&c, &RunOptions::default()).unwrap();
    let b = harness::run_suite(&c, &RunOptions::default()).unwrap();
    let digests = |r: &harness::Report| r.trials.iter().map(|t| t.digest.clone()).collect::<Vec<_>>();
    assert_eq!(digests(&a), digests(&b));

    let mut other = c.clone();
    other.seed = 10;
    let d = harness::run_suite(&other, &RunOptions::default()).unwrap();
    assert_ne!(digests(&a)[1..], digests(&d)[1..]);
}

#[test]
fn replay_reproduces_random_trials() {
    let c = suite("[suite.box]\ntrials = 3\n", Suite::Box);
    for spec in harness::plan(&c).unwrap() {
        let trial = harness::run_trial(&c, &spec, None).unwrap();
        let file = ReplayFile::from_trial(&c, &trial);
        let text = file.to_text();
        let parsed = ReplayFile::from_text(&text).unwrap();
        let report = harness::replay(&parsed, None, &RunOptions::default()).unwrap();
        let t = &report.trials[0];
        assert_eq!(t.digest, trial.digest(), "{}", spec.id);
        assert_eq!(t.checks.get("replay reproduces digest"), Some(&true));
    }
}

#[test]
fn restricted_replay_reads_the_instance_from_the_dump() {
    let c = suite("[suite.restricted]\ntrials = 1\nn = 8\ntruncation = 1\n", Suite::Restricted);
    let spec = &harness::plan(&c).unwrap()[0];
    let trial = harness::run_trial(&c, spec, None).unwrap();
    assert!(!trial.dump.is_empty());
    let file = ReplayFile::from_trial(&c, &trial);
    let report = harness::replay(&file, None, &RunOptions::default()).unwrap();
    assert!(report.summary.pass, "{:?}", report.summary.failures);
}

#[test]
fn failing_trials_write_replay_files() {
    let dir = tempfile::tempdir().unwrap();
    let c = suite("[suite.ftpair]\nidentity = 1e-30\n", Suite::Ftpair);
    let options = RunOptions { dump_fields: None, replay_dir: Some(dir.path().to_path_buf()) };
    let report = harness::run_suite(&c, &options).unwrap();
    assert!(!report.summary.pass);
    let failing: Vec<_> = report.trials.iter().filter(|t| !t.pass).collect();
    assert!(!failing.is_empty());
    for t in failing {
        let path = t.replay.as_ref().expect("replay path");
        let file = ReplayFile::load(Path::new(path)).unwrap();
        let again = harness::replay(&file, None, &RunOptions::default()).unwrap();
        assert_eq!(again.trials[0].checks.get("replay reproduces digest"), Some(&true));
    }
}

#[test]
fn baselines_bound_constants_and_reject_other_configurations() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.toml");
    let c = suite("[suite.dyadic]\ntrials = 4\nexhaustive_depth = 1\n", Suite::Dyadic);
    let mut b = Baseline::default();
    let constants = [("C_bdry".to_string(), 1e-6)].into_iter().collect();
    b.merge("dyadic", c.fingerprint(), &constants);
    b.save(&path).unwrap();

    let mut with = c.clone();
    with.baseline = Some(path.clone());
    let report = harness::run_suite(&with, &RunOptions::default()).unwrap();
    assert!(!report.summary.pass);
    assert!(report.summary.failures.iter().any(|f| f.contains("C_bdry within baseline")));

    let mut changed = with.clone();
    changed.half_width = 4.0;
    assert!(matches!(harness::run_suite(&changed, &RunOptions::default()), Err(Error::Config(_))));
}

#[test]
fn field_dumps_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let c = suite("[suite.error-boundary]\ntrials = 1\nn = 16\n", Suite::ErrorBoundary);
    let options = RunOptions { dump_fields: Some(dir.path().to_path_buf()), replay_dir: None };
    harness::run_suite(&c, &options).unwrap();
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    assert!(!files.is_empty());
    for f in files {
        let field = entangled::field::SampledField::load(&f).unwrap();
        assert_eq!(field.n(), 16);
    }
}
