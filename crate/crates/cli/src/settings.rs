//! Flat `key = value` config files merged with command-line flags.
//!
//! A flag given on the command line wins over the same key in the file.
//! Keys use the long flag name; `-` and `_` are interchangeable. Every
//! resolved value is recorded so the run can be fingerprinted.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use sha2::{Digest, Sha256};

#[derive(Debug, Default)]
pub struct Settings {
    file: BTreeMap<String, String>,
    used: BTreeSet<String>,
    resolved: BTreeMap<String, String>,
}

const PATH_KEYS: [&str; 13] = [
    "taxonomy",
    "sheets",
    "gold",
    "params",
    "init",
    "predictions",
    "entry-level",
    "leaf-weights",
    "output",
    "scores-output",
    "trace-output",
    "soft-labels-output",
    "out-dir",
];

fn canonical(key: &str) -> String {
    key.trim().replace('_', "-")
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Settings::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut file = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", n + 1))?;
            if file.insert(canonical(k), v.trim().to_string()).is_some() {
                bail!("line {}: `{}` set twice", n + 1, k.trim());
            }
        }
        Ok(Settings { file, ..Default::default() })
    }

    /// Flag value, else config value, else `None`.
    pub fn get<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        self.used.insert(key.to_string());
        let value = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(raw) => Some(raw.parse::<T>().map_err(|e| anyhow!("config `{key}`: {e}"))?),
                None => None,
            },
        };
        if let Some(v) = &value {
            self.resolved.insert(key.to_string(), v.to_string());
        }
        Ok(value)
    }

    pub fn or<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let v = self.get(key, flag)?.unwrap_or(default);
        self.resolved.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    pub fn require<T>(&mut self, key: &str, flag: Option<T>) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        self.get(key, flag)?
            .ok_or_else(|| anyhow!("missing `--{key}` (flag or config key)"))
    }

    /// Config keys this command never looked at.
    pub fn unused(&self) -> Vec<&str> {
        self.file
            .keys()
            .filter(|k| !self.used.contains(*k))
            .map(String::as_str)
            .collect()
    }

    /// SHA-256 over the sorted `key=value` lines of every resolved setting
    /// except file locations, so the same run in another directory matches.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.resolved.iter().filter(|(k, _)| !PATH_KEYS.contains(&k.as_str())) {
            h.update(format!("{k}={v}\n").as_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let mut s = Settings::parse("# run\ntheta = 0.4\nmax_iters=7\n").unwrap();
        assert_eq!(s.get::<f64>("theta", None).unwrap(), Some(0.4));
        assert_eq!(s.get("max-iters", Some(9usize)).unwrap(), Some(9));
        assert_eq!(s.or("tau", None, 0.5).unwrap(), 0.5);
        assert!(s.unused().is_empty());
        assert!(s.require::<String>("output", None).is_err());
    }

    #[test]
    fn digest_tracks_values() {
        let mut a = Settings::default();
        a.get("theta", Some(0.4)).unwrap();
        let mut b = Settings::default();
        b.get("theta", Some(0.5)).unwrap();
        assert_ne!(a.digest(), b.digest());
        let mut c = Settings::parse("theta=0.4").unwrap();
        c.get::<f64>("theta", None).unwrap();
        assert_eq!(a.digest(), c.digest());
        assert_eq!(a.digest().len(), 64);
        c.get("output", Some("/tmp/x".to_string())).unwrap();
        assert_eq!(a.digest(), c.digest());
    }

    #[test]
    fn malformed_files() {
        assert!(Settings::parse("theta 0.4").is_err());
        assert!(Settings::parse("a=1\na=2").is_err());
        let mut s = Settings::parse("theta=high").unwrap();
        assert!(s.get::<f64>("theta", None).is_err());
    }
}
