//! Suite configuration: line-based `key = value` files with `[section]`
//! headers, read as TOML.
//!
//! Sections: `[run]`, `[grid]`, `[truncation]`, `[tolerances]`,
//! `[calibration]` and one `[suite.<name>]` per suite. A suite section may
//! override any `[run]`, `[grid]`, `[truncation]` or `[tolerances]` key and
//! set the suite's own parameters.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use super::registry::{entry, Suite};
use crate::error::{Error, Result};

const SECTIONS: [(&str, &[&str]); 5] = [
    ("run", &["seed", "trials", "baseline"]),
    ("grid", &["half_width", "n"]),
    ("truncation", &["n", "steps_per_octave"]),
    ("tolerances", &["identity", "quadrature", "empirical_factor"]),
    ("calibration", &["seed", "trial_factor"]),
];

/// Keys a `[suite.<name>]` section may override. `truncation` stands for
/// `[truncation] n`.
const SUITE_KEYS: [&str; 10] = [
    "seed",
    "trials",
    "baseline",
    "half_width",
    "n",
    "truncation",
    "steps_per_octave",
    "identity",
    "quadrature",
    "empirical_factor",
];

fn suite_key<'a>(section: &str, key: &'a str) -> &'a str {
    if section == "truncation" && key == "n" {
        "truncation"
    } else {
        key
    }
}

/// The tolerance taxonomy: exact checks use cell or integer arithmetic and
/// have no tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Closed-form identities.
    pub identity: f64,
    /// Discretized quantities.
    pub quadrature: f64,
    /// Empirical constants may reach `baseline * empirical_factor`.
    pub empirical_factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { identity: 1e-10, quadrature: 1e-6, empirical_factor: 1.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub suite: Suite,
    pub half_width: f64,
    pub n: usize,
    pub truncation: i32,
    pub steps_per_octave: usize,
    pub trials: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub baseline: Option<PathBuf>,
    /// Suite parameters from `[suite.<name>]`.
    pub params: BTreeMap<String, Value>,
}

/// A parsed configuration file.
#[derive(Debug, Clone)]
pub struct ConfigFile {
    text: String,
    table: Table,
    base_dir: PathBuf,
}

fn config_error(line: Option<usize>, key: &str, message: &str) -> Error {
    match line {
        Some(l) => Error::Config(format!("line {l}, key `{key}`: {message}")),
        None => Error::Config(format!("key `{key}`: {message}")),
    }
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base_dir)
    }

    /// Parses and validates section and key names. Relative paths resolve
    /// against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| {
            let line = e.span().map(|s| text[..s.start].lines().count().max(1));
            match line {
                Some(l) => Error::Config(format!("line {l}: {}", e.message())),
                None => Error::Config(e.message().to_string()),
            }
        })?;
        let me = ConfigFile { text: text.to_string(), table, base_dir: base_dir.to_path_buf() };
        me.validate()?;
        Ok(me)
    }

    /// Line of `key` inside `[section]`, for error messages.
    pub fn line_of(&self, section: &str, key: &str) -> Option<usize> {
        let mut current = String::new();
        for (i, raw) in self.text.lines().enumerate() {
            let line = raw.trim();
            if let Some(h) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                current = h.trim().replace('"', "");
                continue;
            }
            if current == section && line.split('=').next().map(str::trim) == Some(key) {
                return Some(i + 1);
            }
        }
        None
    }

    fn validate(&self) -> Result<()> {
        for (name, value) in &self.table {
            if name == "suite" {
                let Value::Table(suites) = value else {
                    return Err(config_error(self.line_of("", name), name, "expected [suite.<name>] sections"));
                };
                for (suite_name, body) in suites {
                    let suite: Suite = suite_name.parse().map_err(|_| {
                        config_error(self.line_of(&format!("suite.{suite_name}"), ""), suite_name, "unknown suite")
                    })?;
                    let Value::Table(body) = body else {
                        return Err(config_error(None, suite_name, "expected a section"));
                    };
                    let section = format!("suite.{suite_name}");
                    for key in body.keys() {
                        let generic = SUITE_KEYS.contains(&key.as_str());
                        let own = entry(suite).params.iter().any(|(k, _)| k == key);
                        if !generic && !own {
                            return Err(config_error(self.line_of(&section, key), key, &format!("unknown key in [{section}]")));
                        }
                    }
                }
                continue;
            }
            let Some((_, keys)) = SECTIONS.iter().find(|(s, _)| s == name) else {
                return Err(config_error(None, name, "unknown section"));
            };
            let Value::Table(body) = value else {
                return Err(config_error(self.line_of("", name), name, "expected a section"));
            };
            for key in body.keys() {
                if !keys.contains(&key.as_str()) {
                    return Err(config_error(self.line_of(name, key), key, &format!("unknown key in [{name}]")));
                }
            }
        }
        Ok(())
    }

    /// `key` from `[suite.<name>]` (as `suite_key`) or else from `[section]`.
    fn lookup(&self, suite: Option<Suite>, section: &str, key: &str) -> Option<(String, String, &Value)> {
        if let Some(s) = suite {
            let name = entry(s).name;
            let suite_key = suite_key(section, key);
            if let Some(v) = self.table.get("suite").and_then(|t| t.get(name)).and_then(|t| t.get(suite_key)) {
                return Some((format!("suite.{name}"), suite_key.to_string(), v));
            }
        }
        self.table.get(section).and_then(|t| t.get(key)).map(|v| (section.to_string(), key.to_string(), v))
    }

    fn float(&self, suite: Option<Suite>, section: &str, key: &str, default: f64) -> Result<f64> {
        let Some((sec, k, v)) = self.lookup(suite, section, key) else { return Ok(default) };
        let x = match v {
            Value::Float(x) => *x,
            Value::Integer(i) => *i as f64,
            _ => return Err(config_error(self.line_of(&sec, &k), &k, "expected a number")),
        };
        if !(x > 0.0 && x.is_finite()) {
            return Err(config_error(self.line_of(&sec, &k), &k, "must be positive"));
        }
        Ok(x)
    }

    fn integer(&self, suite: Option<Suite>, section: &str, key: &str, default: i64, allow_zero: bool) -> Result<i64> {
        let Some((sec, k, v)) = self.lookup(suite, section, key) else { return Ok(default) };
        let Value::Integer(i) = v else {
            return Err(config_error(self.line_of(&sec, &k), &k, "expected an integer"));
        };
        if *i < 0 || (*i == 0 && !allow_zero) {
            return Err(config_error(self.line_of(&sec, &k), &k, "must be positive"));
        }
        Ok(*i)
    }

    /// The resolved configuration of one suite.
    pub fn suite_config(&self, suite: Suite) -> Result<SuiteConfig> {
        let s = Some(suite);
        let e = entry(suite);
        let baseline = match self.lookup(s, "run", "baseline") {
            None => None,
            Some((_, _, Value::String(p))) => Some(self.base_dir.join(p)),
            Some((sec, k, _)) => return Err(config_error(self.line_of(&sec, &k), &k, "expected a path string")),
        };
        let d = Tolerances::default();
        let tolerances = Tolerances {
            identity: self.float(s, "tolerances", "identity", d.identity)?,
            quadrature: self.float(s, "tolerances", "quadrature", d.quadrature)?,
            empirical_factor: self.float(s, "tolerances", "empirical_factor", d.empirical_factor)?,
        };
        let n = self.integer(s, "grid", "n", 16, false)? as usize;
        if !n.is_power_of_two() {
            let sec = self.lookup(s, "grid", "n").map(|(x, _, _)| x).unwrap_or_default();
            return Err(config_error(self.line_of(&sec, "n"), "n", "must be a power of two"));
        }
        let mut params = BTreeMap::new();
        let own = self.table.get("suite").and_then(|t| t.get(e.name)).and_then(Value::as_table);
        for (k, default) in e.params {
            let v = match own.and_then(|t| t.get(*k)) {
                Some(v) => v.clone(),
                None => format!("v = {default}").parse::<Table>().expect("registry default")["v"].clone(),
            };
            params.insert(k.to_string(), v);
        }
        Ok(SuiteConfig {
            suite,
            half_width: self.float(s, "grid", "half_width", 2.0)?,
            n,
            truncation: self.integer(s, "truncation", "n", 2, false)? as i32,
            steps_per_octave: self.integer(s, "truncation", "steps_per_octave", 4, false)? as usize,
            trials: self.integer(s, "run", "trials", e.default_trials as i64, true)? as usize,
            seed: self.integer(s, "run", "seed", 1, true)? as u64,
            tolerances,
            baseline,
            params,
        })
    }

    /// `(seed, trial_factor)` for calibration runs.
    pub fn calibration(&self) -> Result<(u64, usize)> {
        Ok((
            self.integer(None, "calibration", "seed", 1_000, true)? as u64,
            self.integer(None, "calibration", "trial_factor", 2, false)? as usize,
        ))
    }
}

impl SuiteConfig {
    /// Configuration with defaults only.
    pub fn defaults(suite: Suite) -> Self {
        ConfigFile::parse("", Path::new("")).and_then(|c| c.suite_config(suite)).expect("defaults are valid")
    }

    fn param(&self, key: &str) -> Result<&Value> {
        self.params.get(key).ok_or_else(|| Error::Config(format!("suite `{}` has no parameter `{key}`", self.suite)))
    }

    pub fn f64_param(&self, key: &str) -> Result<f64> {
        match self.param(key)? {
            Value::Float(x) => Ok(*x),
            Value::Integer(i) => Ok(*i as f64),
            _ => Err(config_error(None, key, "expected a number")),
        }
    }

    pub fn usize_param(&self, key: &str) -> Result<usize> {
        match self.param(key)? {
            Value::Integer(i) if *i >= 0 => Ok(*i as usize),
            _ => Err(config_error(None, key, "expected a non-negative integer")),
        }
    }

    pub fn str_param(&self, key: &str) -> Result<String> {
        match self.param(key)? {
            Value::String(s) => Ok(s.clone()),
            _ => Err(config_error(None, key, "expected a string")),
        }
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let Value::Array(items) = self.param(key)? else {
            return Err(config_error(None, key, "expected an array"));
        };
        items
            .iter()
            .map(|v| match v {
                Value::Float(x) => Ok(*x),
                Value::Integer(i) => Ok(*i as f64),
                _ => Err(config_error(None, key, "expected numbers")),
            })
            .collect()
    }

    /// Arrays of number arrays, e.g. exponent tuples.
    pub fn f64_lists(&self, key: &str) -> Result<Vec<Vec<f64>>> {
        let Value::Array(items) = self.param(key)? else {
            return Err(config_error(None, key, "expected an array of arrays"));
        };
        items
            .iter()
            .map(|row| match row {
                Value::Array(xs) => xs
                    .iter()
                    .map(|v| match v {
                        Value::Float(x) => Ok(*x),
                        Value::Integer(i) => Ok(*i as f64),
                        _ => Err(config_error(None, key, "expected numbers")),
                    })
                    .collect(),
                _ => Err(config_error(None, key, "expected an array of arrays")),
            })
            .collect()
    }

    /// Flat `key = value` view with a fixed key order.
    pub fn to_pairs(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("suite".into(), self.suite.to_string());
        m.insert("grid.half_width".into(), format!("{:?}", self.half_width));
        m.insert("grid.n".into(), self.n.to_string());
        m.insert("truncation.n".into(), self.truncation.to_string());
        m.insert("truncation.steps_per_octave".into(), self.steps_per_octave.to_string());
        m.insert("run.trials".into(), self.trials.to_string());
        m.insert("run.seed".into(), self.seed.to_string());
        m.insert("tolerances.identity".into(), format!("{:?}", self.tolerances.identity));
        m.insert("tolerances.quadrature".into(), format!("{:?}", self.tolerances.quadrature));
        m.insert("tolerances.empirical_factor".into(), format!("{:?}", self.tolerances.empirical_factor));
        for (k, v) in &self.params {
            m.insert(format!("params.{k}"), v.to_string());
        }
        m
    }

    /// Hash of everything except the trial count and seed.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.to_pairs() {
            if k != "run.trials" && k != "run.seed" {
                h.update(format!("{k}={v}\n"));
            }
        }
        hex(&h.finalize()[..8])
    }

    /// The configuration as a standalone file, used in replay dumps.
    pub fn to_toml(&self) -> String {
        let name = entry(self.suite).name;
        let mut out = format!("[run]\nseed = {}\ntrials = {}\n", self.seed, self.trials);
        out += &format!("\n[grid]\nhalf_width = {:?}\nn = {}\n", self.half_width, self.n);
        out += &format!("\n[truncation]\nn = {}\nsteps_per_octave = {}\n", self.truncation, self.steps_per_octave);
        let t = &self.tolerances;
        out += &format!(
            "\n[tolerances]\nidentity = {:?}\nquadrature = {:?}\nempirical_factor = {:?}\n",
            t.identity, t.quadrature, t.empirical_factor
        );
        out += &format!("\n[suite.{name}]\n");
        for (k, v) in &self.params {
            out += &format!("{k} = {v}\n");
        }
        out
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_sections_override_globals() {
        let text = "[grid]\nn = 16\n\n[suite.box]\nn = 8\ntrials = 3\n";
        let c = ConfigFile::parse(text, Path::new("")).unwrap();
        let b = c.suite_config(Suite::Box).unwrap();
        assert_eq!((b.n, b.trials), (8, 3));
        assert_eq!(c.suite_config(Suite::Dyadic).unwrap().n, 16);
    }

    #[test]
    fn errors_name_line_and_key() {
        let text = "[grid]\nn = 16\nbogus = 1\n";
        let e = ConfigFile::parse(text, Path::new("")).unwrap_err().to_string();
        assert!(e.contains("line 3") && e.contains("bogus"), "{e}");
        let text = "[grid]\nn = 12\n";
        let e = ConfigFile::parse(text, Path::new("")).unwrap().suite_config(Suite::Box).unwrap_err().to_string();
        assert!(e.contains("line 2") && e.contains("power of two"), "{e}");
        let e = ConfigFile::parse("[grid\n", Path::new("")).unwrap_err().to_string();
        assert!(e.contains("line 1"), "{e}");
        let e = ConfigFile::parse("[suite.nope]\n", Path::new("")).unwrap_err().to_string();
        assert!(e.contains("unknown suite"), "{e}");
    }

    #[test]
    fn round_trip_through_toml() {
        let c = SuiteConfig::defaults(Suite::Restricted);
        let back = ConfigFile::parse(&c.to_toml(), Path::new("")).unwrap().suite_config(Suite::Restricted).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.fingerprint(), c.fingerprint());
    }
}
