//! Calibrated constants, stored as TOML with one configuration fingerprint
//! per suite.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    /// Suite name to the fingerprint of the configuration it was calibrated with.
    pub fingerprint: BTreeMap<String, String>,
    pub constants: BTreeMap<String, f64>,
}

impl Baseline {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read baseline {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("baseline {}: {}", path.display(), e.message())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Fails when the suite was calibrated under a different configuration.
    pub fn ensure_matches(&self, suite: &str, fingerprint: &str) -> Result<()> {
        match self.fingerprint.get(suite) {
            Some(f) if f == fingerprint => Ok(()),
            Some(f) => Err(Error::Config(format!(
                "baseline for `{suite}` was calibrated with configuration {f}, this run uses {fingerprint}; rerun `ev calibrate`"
            ))),
            None => Err(Error::Config(format!("baseline has no calibration for `{suite}`"))),
        }
    }

    pub fn merge(&mut self, suite: &str, fingerprint: String, constants: &BTreeMap<String, f64>) {
        self.fingerprint.insert(suite.to_string(), fingerprint);
        for (k, &v) in constants {
            self.constants.insert(k.clone(), v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.toml");
        let mut b = Baseline::default();
        b.merge("dyadic", "abc".into(), &BTreeMap::from([("C_bdry".to_string(), 10.9375)]));
        b.save(&path).unwrap();
        let back = Baseline::load(&path).unwrap();
        assert_eq!(back, b);
        assert!(back.ensure_matches("dyadic", "abc").is_ok());
        assert!(back.ensure_matches("dyadic", "xyz").is_err());
        assert!(back.ensure_matches("tree", "abc").is_err());
    }
}
