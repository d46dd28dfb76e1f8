//! `key = value` run configuration files.
//!
//! Keys are the long flag names without dashes (`n`, `mu`, `muf`,
//! `disorder`, ...). `#` starts a comment. Flags given on the command line
//! win over the file.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    entries: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Format(format!("config line {}: expected `key = value`", i + 1))
            })?;
            let k = k.trim().trim_start_matches("--").replace('_', "-");
            if k.is_empty() {
                return Err(Error::Format(format!("config line {}: empty key", i + 1)));
            }
            if entries.insert(k.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Format(format!("config line {}: `{k}` set twice", i + 1)));
            }
        }
        Ok(RunConfig { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|e| {
                Error::Format(format!("config key `{key}`: bad value `{v}`: {e}"))
            }),
        }
    }

    /// The flag if given, else the file, else `None`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let c = RunConfig::parse("# run\nn = 200\nmu=2 # rate\nmu_f = 0.5\n\n").unwrap();
        assert_eq!(c.get::<usize>("n").unwrap(), Some(200));
        assert_eq!(c.get::<f64>("mu-f").unwrap(), Some(0.5));
        assert_eq!(c.pick(Some(7usize), "n").unwrap(), Some(7));
        assert_eq!(c.pick::<f64>(None, "mu").unwrap(), Some(2.0));
        assert_eq!(c.pick::<f64>(None, "sparsity").unwrap(), None);
    }

    #[test]
    fn bad_lines() {
        assert!(RunConfig::parse("n 200").is_err());
        assert!(RunConfig::parse("n=1\nn=2").is_err());
        assert!(RunConfig::parse("=3").is_err());
        let c = RunConfig::parse("n = many").unwrap();
        assert!(c.get::<usize>("n").is_err());
    }
}
