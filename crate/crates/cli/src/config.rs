//! Plain `key = value` configuration files.

use std::collections::BTreeMap;
use std::path::Path;

use farey_thermo::{Error, Result};

/// Keys a config file may set. Command-line flags win over the file.
pub const KEYS: &[&str] = &[
    "beta",
    "depth",
    "n_range",
    "scale",
    "estimator",
    "precision_bits",
    "enum_cap",
    "digit_cap",
    "threads",
    "format",
    "output",
    "k_grid",
    "window",
    "tol",
    "slope_tol",
    "enum_n",
];

#[derive(Debug, Default, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidInput(format!("config line {}: expected key = value", i + 1)))?;
            let k = k.trim().replace('-', "_");
            if !KEYS.contains(&k.as_str()) {
                return Err(Error::InvalidInput(format!("config line {}: unknown key {k:?}", i + 1)));
            }
            values.insert(k, v.trim().to_string());
        }
        Ok(Config { values })
    }

    pub fn load(path: &Path) -> Result<Config> {
        Config::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::InvalidInput(format!("config key {key}: cannot parse {v:?}"))),
        }
    }
}
