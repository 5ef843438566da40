//! Plain `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are skipped. Keys may use `-` or
//! `_`; values are taken verbatim after trimming. A flag given on the
//! command line always wins over the same key in the file.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const KNOWN_KEYS: [&str; 25] = [
    "fs",
    "out_dir",
    "seed",
    "low_cut",
    "high_cut",
    "order",
    "zero_phase",
    "detrend_w1",
    "detrend_w2",
    "t_rr",
    "refractory_ms",
    "amp_floor",
    "alg1_faithful",
    "window_s",
    "label_map",
    "model",
    "max_depth",
    "min_leaf",
    "k",
    "lr",
    "epochs",
    "c",
    "folds",
    "max_points",
    "stage",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!("config line {}: expected key = value", i + 1)));
            };
            let key = k.trim().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("config line {}: unknown key {key:?}", i + 1)));
            }
            if values.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("config line {}: duplicate key {key:?}", i + 1)));
            }
        }
        Ok(ConfigFile { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// The file's value for `key`, parsed.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("config key {key}: cannot parse {v:?}"))),
        }
    }

    /// Command-line value, else file value, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }

    /// Like [`pick`](Self::pick) with no default.
    pub fn pick_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    /// A boolean switch: a flag present on the command line forces
    /// `when_set`; otherwise the file decides.
    pub fn switch(&self, flag_set: bool, when_set: bool, key: &str, default: bool) -> Result<bool> {
        if flag_set {
            Ok(when_set)
        } else {
            Ok(self.get(key)?.unwrap_or(default))
        }
    }
}
