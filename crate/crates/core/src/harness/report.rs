//! Trial records and the JSON run report. Field order is fixed by the
//! struct layout and maps are ordered, so equal runs serialize identically
//! apart from `wall_time_seconds`.

use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::hex;
use crate::field::SampledField;

/// What one trial produced.
#[derive(Debug, Clone, Default)]
pub struct Trial {
    pub id: String,
    pub seed: u64,
    pub values: BTreeMap<String, f64>,
    pub constants: BTreeMap<String, f64>,
    pub checks: BTreeMap<String, bool>,
    /// Text description of the inputs; replays regenerate or parse it.
    pub dump: String,
    /// Fields written by `--dump-fields`.
    pub fields: Vec<(String, SampledField)>,
}

impl Trial {
    pub fn new(id: impl Into<String>, seed: u64) -> Self {
        Trial { id: id.into(), seed, ..Trial::default() }
    }

    pub fn value(&mut self, key: impl Into<String>, v: f64) {
        self.values.insert(key.into(), v);
    }

    /// Records an empirical constant; the largest value per key wins.
    pub fn constant(&mut self, key: &str, v: f64) {
        let e = self.constants.entry(key.to_string()).or_insert(v);
        *e = e.max(v);
    }

    pub fn check(&mut self, key: impl Into<String>, pass: bool) {
        let key = key.into();
        let prev = self.checks.get(&key).copied().unwrap_or(true);
        self.checks.insert(key, prev && pass);
    }

    pub fn pass(&self) -> bool {
        self.checks.values().all(|&p| p)
    }

    /// SHA-256 over the id, seed, dump, values and constants at full precision.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("{}\n{}\n{}\n", self.id, self.seed, self.dump));
        for (k, v) in self.values.iter().chain(&self.constants) {
            h.update(format!("{k}={v:?}\n"));
        }
        hex(&h.finalize())
    }

    pub fn record(&self, replay: Option<String>) -> TrialRecord {
        TrialRecord {
            id: self.id.clone(),
            seed: self.seed,
            digest: self.digest(),
            values: self.values.clone(),
            constants: self.constants.clone(),
            checks: self.checks.clone(),
            pass: self.pass(),
            replay,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub id: String,
    pub seed: u64,
    pub digest: String,
    pub values: BTreeMap<String, f64>,
    pub constants: BTreeMap<String, f64>,
    pub checks: BTreeMap<String, bool>,
    pub pass: bool,
    /// Replay file written for this trial, if any.
    pub replay: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub max_constants: BTreeMap<String, f64>,
    /// `trial: check` for every failed check, plus suite-level failures.
    pub failures: Vec<String>,
    pub notes: Vec<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub suite: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub trials: Vec<TrialRecord>,
    pub summary: Summary,
    pub wall_time_seconds: f64,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn trial(&self, id: &str) -> Option<&TrialRecord> {
        self.trials.iter().find(|t| t.id == id)
    }
}

/// Summary over trial records; `extra` holds suite-level failures.
pub fn summarize(trials: &[TrialRecord], extra: Vec<String>, notes: Vec<String>) -> Summary {
    let mut max_constants: BTreeMap<String, f64> = BTreeMap::new();
    let mut failures = Vec::new();
    for t in trials {
        for (k, &v) in &t.constants {
            let e = max_constants.entry(k.clone()).or_insert(v);
            *e = e.max(v);
        }
        for (k, &p) in &t.checks {
            if !p {
                failures.push(format!("{}: {k}", t.id));
            }
        }
    }
    failures.extend(extra);
    let pass = failures.is_empty();
    Summary { max_constants, failures, notes, pass }
}
