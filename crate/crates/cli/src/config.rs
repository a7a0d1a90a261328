//! Flat `key = value` config files with optional `[section]` headers.
//!
//! Keys are validated strictly against the known set; unknown keys are
//! rejected with their line number. Section headers only namespace for
//! readability — keys are globally unique, so `[solve]` / `[data]`
//! groupings are cosmetic.

use std::collections::BTreeMap;

use crate::CliError;

/// Every key a config file may define (the long CLI flags).
const KNOWN_KEYS: &[&str] = &[
    "mu",
    "nu",
    "q2",
    "genus",
    "degree",
    "n",
    "tau",
    "area",
    "full",
    "tol",
    "max_iter",
    "seed",
    "background",
    "dump_fields",
    "format",
    "out_dir",
    "phi1",
    "phi2",
    "phi_mu",
    "zero_root",
];

pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn empty() -> Self {
        ConfigFile { values: BTreeMap::new() }
    }

    pub fn load(path: &str) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("config {path}: {e}")))?;
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') {
                    return Err(CliError::Usage(format!(
                        "config {path} line {}: malformed section header `{line}`",
                        lineno + 1
                    )));
                }
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "config {path} line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(CliError::Usage(format!(
                    "config {path} line {}: unknown key `{key}`",
                    lineno + 1
                )));
            }
            if values.insert(key.to_string(), value.to_string()).is_some() {
                return Err(CliError::Usage(format!(
                    "config {path} line {}: duplicate key `{key}`",
                    lineno + 1
                )));
            }
        }
        Ok(ConfigFile { values })
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.values.get(key).cloned()
    }

    /// Fetch and parse a value; a present-but-unparsable value is a usage
    /// error (silently ignoring it would break reproducibility).
    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("config key {key}: bad value `{s}`"))),
        }
    }
}
