//! Acceptance criteria 1 to 11, one PASS/FAIL line each, evaluated on the
//! suites of `configs/default.toml` against `baselines/default.toml`.
//!
//! ```bash
//! cargo test --release --test acceptance
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use entangled::harness::{self, ConfigFile, Report, RunOptions, Suite, TrialRecord};

fn config() -> ConfigFile {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    ConfigFile::load(&path).expect("default configuration")
}

struct Runs {
    config: ConfigFile,
    reports: BTreeMap<Suite, Result<Report, String>>,
}

impl Runs {
    fn get(&mut self, suite: Suite) -> Result<&Report, String> {
        let config = &self.config;
        self.reports
            .entry(suite)
            .or_insert_with(|| {
                let c = config.suite_config(suite).map_err(|e| e.to_string())?;
                harness::run_suite(&c, &RunOptions::default()).map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(Clone::clone)
    }
}

/// Every selected trial carries each named check and passes it.
fn checks(report: &Report, select: impl Fn(&TrialRecord) -> bool, names: &[&str]) -> Result<usize, String> {
    let trials: Vec<&TrialRecord> = report.trials.iter().filter(|t| select(t)).collect();
    if trials.is_empty() {
        return Err("no trials selected".into());
    }
    for t in &trials {
        for n in names {
            match t.checks.get(*n) {
                Some(true) => {}
                Some(false) => return Err(format!("{}: {n} failed", t.id)),
                None => return Err(format!("{}: {n} missing", t.id)),
            }
        }
    }
    Ok(trials.len())
}

fn max_value(report: &Report, key: &str) -> f64 {
    report.trials.iter().filter_map(|t| t.values.get(key)).fold(0.0, |a, &b| a.max(b))
}

fn whole_suite(report: &Report) -> Result<(), String> {
    match report.summary.failures.first() {
        None => Ok(()),
        Some(f) => Err(format!("{} failures, first: {f}", report.summary.failures.len())),
    }
}

fn time_below(report: &Report, limit: f64) -> Result<(), String> {
    if report.wall_time_seconds < limit {
        Ok(())
    } else {
        Err(format!("{:.2} s exceeds {limit} s", report.wall_time_seconds))
    }
}

fn all_trials(_: &TrialRecord) -> bool {
    true
}

fn random(t: &TrialRecord) -> bool {
    t.id.parse::<usize>().is_ok()
}

fn criterion(runs: &mut Runs, n: usize) -> Result<String, String> {
    match n {
        1 => {
            let r = runs.get(Suite::Ftpair)?;
            let k = checks(r, |t| t.id.starts_with("gaussian-"), &["pair identity"])?;
            time_below(r, 1.0)?;
            Ok(format!("{k} Gaussian pairs, {:.3} s", r.wall_time_seconds))
        }
        2 => {
            let r = runs.get(Suite::Ftpair)?;
            checks(r, |t| t.id == "square-function", &["pair identity"])?;
            checks(r, |t| t.id == "phi-hat-edge", &["phi^(2) vanishes", "phi^(-2) vanishes"])?;
            Ok("square-function pair and phi^(+-2)".into())
        }
        3 => {
            let r = runs.get(Suite::Telescoping)?;
            let k = checks(r, |t| t.id.starts_with("ftc-"), &["telescoping in the scale variable"])?;
            Ok(format!("{k} profiles, max relative error {:.2e}", max_value(r, "relative error")))
        }
        4 => {
            let r = runs.get(Suite::Dyadic)?;
            checks(r, |t| t.id == "exhaustive", &["leaves partition the root", "boundary ratio within max_ratio"])?;
            let k = checks(r, random, &["boundary ratio within max_ratio", "C_bdry within baseline"])?;
            whole_suite(r)?;
            time_below(r, 30.0)?;
            Ok(format!("exhaustive plus {k} random trees, {:.1} s", r.wall_time_seconds))
        }
        5 => {
            let r = runs.get(Suite::Box)?;
            checks(r, |t| t.id == "brute-force", &["separable matches brute force"])?;
            let k = checks(r, random, &["chain holds at every point"])?;
            Ok(format!("{k} quadruples"))
        }
        6 => {
            let r = runs.get(Suite::ErrorBoundary)?;
            let k = checks(r, all_trials, &["C_err within baseline", "C_bnd within baseline"])?;
            whole_suite(r)?;
            Ok(format!("{k} instances"))
        }
        7 => {
            let r = runs.get(Suite::Tree)?;
            let k = checks(r, random, &["C_tree within baseline", "stable under refinement"])?;
            whole_suite(r)?;
            Ok(format!("{k} instances, max refinement change {:.3}", max_value(r, "refinement change")))
        }
        8 => {
            let r = runs.get(Suite::Parseval)?;
            let k = checks(r, all_trials, &["sides agree"])?;
            whole_suite(r)?;
            time_below(r, 60.0)?;
            Ok(format!("{k} instances, {:.1} s", r.wall_time_seconds))
        }
        9 => {
            let r = runs.get(Suite::Restricted)?;
            let names = ["|H| <= 1/18", "2 |E1'| >= |E1|", "trees convex", "exceptional squares pack"];
            let k = checks(r, all_trials, &names)?;
            Ok(format!("{k} instances"))
        }
        10 => {
            let r = runs.get(Suite::Restricted)?;
            let k = checks(r, all_trials, &["direct within majorant", "C_rt within baseline"])?;
            for a in 1..=3 {
                let name = format!("C_alpha_{a} within baseline");
                checks(r, |t| t.id.starts_with(&format!("a{a}-")), &[name.as_str()])?;
            }
            whole_suite(r)?;
            Ok(format!("{k} instances"))
        }
        11 => {
            let r = runs.get(Suite::Kernels)?;
            checks(r, |t| t.id == "phi-asymptotic", &["x^20 Phi(x) near 9!/2"])?;
            checks(r, |t| t.id == "phi-origin", &["Phi(0) = 1/20"])?;
            Ok("x^20 Phi(x) at 50 and Phi(0)".into())
        }
        _ => Err(format!("no criterion {n}")),
    }
}

fn main() -> ExitCode {
    let mut runs = Runs { config: config(), reports: BTreeMap::new() };
    let mut failed = Vec::new();
    for n in 1..=11 {
        match criterion(&mut runs, n) {
            Ok(detail) => println!("PASS criterion {n}: {detail}"),
            Err(why) => {
                println!("FAIL criterion {n}: {why}");
                failed.push(n);
            }
        }
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
