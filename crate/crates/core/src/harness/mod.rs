//! Seeded verification suites with JSON reports, calibrated baselines and
//! single-trial replay.
//!
//! A run plans a list of trials from the configuration, evaluates each one,
//! compares its empirical constants with `baseline * empirical_factor` and
//! summarizes. Trial seeds are derived from the run seed and the trial
//! index, so reports are reproducible.

pub mod baseline;
pub mod config;
pub mod registry;
pub mod replay;
pub mod report;
mod suites;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sha2::{Digest, Sha256};

pub use baseline::Baseline;
pub use config::{ConfigFile, SuiteConfig, Tolerances};
pub use registry::{entry, Suite, SuiteEntry, SUITES};
pub use replay::ReplayFile;
pub use report::{Report, Summary, Trial, TrialRecord};

use crate::error::{Error, Result};

/// One planned trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialSpec {
    pub id: String,
    pub seed: u64,
}

/// Seed of trial `index`, from the run seed and the suite name.
pub fn derive_seed(run_seed: u64, suite: Suite, index: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(format!("{suite}:{run_seed}:{index}"));
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("eight bytes"))
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Directory for the fields of every trial.
    pub dump_fields: Option<PathBuf>,
    /// Directory for replay files of failing trials.
    pub replay_dir: Option<PathBuf>,
}

/// The trials a run of `config` evaluates.
pub fn plan(config: &SuiteConfig) -> Result<Vec<TrialSpec>> {
    suites::plan(config)
}

/// Evaluates one trial. `dump` is the input description from a replay file.
pub fn run_trial(config: &SuiteConfig, spec: &TrialSpec, dump: Option<&str>) -> Result<Trial> {
    suites::run(config, spec, dump)
}

/// The baseline named by the configuration, checked against its fingerprint.
pub fn load_baseline(config: &SuiteConfig) -> Result<Option<Baseline>> {
    let Some(path) = &config.baseline else { return Ok(None) };
    if entry(config.suite).constants.is_empty() {
        return Ok(None);
    }
    let b = Baseline::load(path)?;
    b.ensure_matches(entry(config.suite).name, &config.fingerprint())?;
    Ok(Some(b))
}

fn apply_baseline(trial: &mut Trial, config: &SuiteConfig, baseline: Option<&Baseline>) {
    let Some(b) = baseline else { return };
    let factor = config.tolerances.empirical_factor;
    let constants: Vec<(String, f64)> = trial.constants.iter().map(|(k, v)| (k.clone(), *v)).collect();
    for (k, v) in constants {
        if let Some(&c) = b.constants.get(&k) {
            trial.value(format!("{k} bound"), c * factor);
            trial.check(format!("{k} within baseline"), v <= c * factor);
        }
    }
}

fn evaluate(config: &SuiteConfig, spec: &TrialSpec, dump: Option<&str>, failures: &mut Vec<String>) -> Trial {
    match run_trial(config, spec, dump) {
        Ok(t) => t,
        Err(e) => {
            failures.push(format!("{}: {e}", spec.id));
            let mut t = Trial::new(spec.id.clone(), spec.seed);
            t.check("completed", false);
            t
        }
    }
}

fn write_fields(dir: &Path, trial: &Trial) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, f) in &trial.fields {
        f.save(&dir.join(format!("{}-{name}.field", trial.id)))?;
    }
    Ok(())
}

fn finish(
    config: &SuiteConfig,
    trials: Vec<Trial>,
    baseline: Option<&Baseline>,
    options: &RunOptions,
    mut failures: Vec<String>,
    started: Instant,
) -> Result<Report> {
    let mut notes = Vec::new();
    if baseline.is_none() && !entry(config.suite).constants.is_empty() {
        notes.push("no baseline configured; empirical constants are not checked".into());
    }
    let mut records = Vec::with_capacity(trials.len());
    for mut t in trials {
        apply_baseline(&mut t, config, baseline);
        if let Some(dir) = &options.dump_fields {
            write_fields(dir, &t)?;
        }
        let mut replay = None;
        if let (Some(dir), false) = (&options.replay_dir, t.pass()) {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(format!("{}-{}.replay.toml", config.suite, t.id));
            ReplayFile::from_trial(config, &t).save(&path)?;
            replay = Some(path.display().to_string());
        }
        records.push(t.record(replay));
    }
    let wall = started.elapsed().as_secs_f64();
    if let Some(limit) = entry(config.suite).time_limit {
        if wall > limit {
            failures.push(format!("wall time {wall:.2} s exceeds {limit} s"));
        }
    }
    Ok(Report {
        suite: config.suite.to_string(),
        seed: config.seed,
        config: config.to_pairs(),
        summary: report::summarize(&records, failures, notes),
        trials: records,
        wall_time_seconds: wall,
    })
}

/// Runs every planned trial of the suite.
pub fn run_suite(config: &SuiteConfig, options: &RunOptions) -> Result<Report> {
    let baseline = load_baseline(config)?;
    run_with_baseline(config, baseline.as_ref(), options)
}

fn run_with_baseline(config: &SuiteConfig, baseline: Option<&Baseline>, options: &RunOptions) -> Result<Report> {
    let started = Instant::now();
    let mut failures = Vec::new();
    let trials: Vec<Trial> = plan(config)?.iter().map(|s| evaluate(config, s, None, &mut failures)).collect();
    finish(config, trials, baseline, options, failures, started)
}

/// Reruns the trial of a replay file under its configuration snapshot and
/// checks that the digest is reproduced. The baseline comes from `current`
/// when given.
pub fn replay(file: &ReplayFile, current: Option<&SuiteConfig>, options: &RunOptions) -> Result<Report> {
    let mut config = file.suite_config()?;
    if let Some(c) = current {
        if c.suite != config.suite {
            return Err(Error::Config(format!("replay is for `{}`, not `{}`", config.suite, c.suite)));
        }
        config.baseline = c.baseline.clone();
    }
    let baseline = load_baseline(&config)?;
    let started = Instant::now();
    let spec = TrialSpec { id: file.replay.trial.clone(), seed: file.replay.seed };
    let mut failures = Vec::new();
    let mut trial = evaluate(&config, &spec, Some(&file.dump), &mut failures);
    let reproduced = trial.digest() == file.replay.digest;
    trial.check("replay reproduces digest", reproduced);
    finish(&config, vec![trial], baseline.as_ref(), &RunOptions { replay_dir: None, ..options.clone() }, failures, started)
}

/// Runs every suite with empirical constants at `trials * trial_factor`
/// under the calibration seed and records the largest constants.
pub fn calibrate(config: &ConfigFile) -> Result<(Baseline, Vec<Report>)> {
    let (seed, factor) = config.calibration()?;
    let mut baseline = Baseline::default();
    let mut reports = Vec::new();
    for suite in registry::calibrated_suites() {
        let mut c = config.suite_config(suite)?;
        c.seed = seed;
        c.trials *= factor;
        c.baseline = None;
        let report = run_with_baseline(&c, None, &RunOptions::default())?;
        let constants: BTreeMap<String, f64> = report.summary.max_constants.clone();
        baseline.merge(entry(suite).name, c.fingerprint(), &constants);
        reports.push(report);
    }
    Ok((baseline, reports))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_by_suite_and_index() {
        let a = derive_seed(1, Suite::Box, 0);
        assert_ne!(a, derive_seed(1, Suite::Box, 1));
        assert_ne!(a, derive_seed(1, Suite::Tree, 0));
        assert_ne!(a, derive_seed(2, Suite::Box, 0));
        assert_eq!(a, derive_seed(1, Suite::Box, 0));
    }
}
