//! Replay files: everything needed to rerun one trial exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ConfigFile, SuiteConfig};
use super::report::Trial;
use crate::error::{Error, Result};

mod seed_text {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&seed.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayHeader {
    pub suite: String,
    pub trial: String,
    /// Stored as a string: TOML integers are signed 64-bit.
    #[serde(with = "seed_text")]
    pub seed: u64,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayFile {
    pub replay: ReplayHeader,
    /// Snapshot of the suite configuration as a standalone config file.
    pub config: String,
    /// The trial's input description.
    pub dump: String,
}

impl ReplayFile {
    pub fn from_trial(config: &SuiteConfig, trial: &Trial) -> Self {
        ReplayFile {
            replay: ReplayHeader {
                suite: config.suite.to_string(),
                trial: trial.id.clone(),
                seed: trial.seed,
                digest: trial.digest(),
            },
            config: config.to_toml(),
            dump: trial.dump.clone(),
        }
    }

    pub fn suite_config(&self) -> Result<SuiteConfig> {
        ConfigFile::parse(&self.config, Path::new(""))?.suite_config(self.replay.suite.parse()?)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("replay files serialize")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].lines().count().max(1)).unwrap_or(0);
            Error::Parse { line, message: e.message().to_string() }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read replay {}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}
