//! Sectioned `key = value` run configuration.
//!
//! ```text
//! # comment
//! [model]
//! side = 32
//! potential = power-law
//! [grid]
//! beta = 0.5, 1, 2
//! ```
//!
//! Keys are addressed as `section.key`. Every key can be overridden on the
//! command line with `--section.key=value`. Keys that no subcommand reads
//! are rejected so typos do not pass silently.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;
use std::sync::Mutex;

use crate::error::{CliError, CliResult};

#[derive(Debug, Default)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
    read: Mutex<BTreeSet<String>>,
    resolved: Mutex<BTreeMap<String, String>>,
}

fn bad(key: &str, msg: impl Display) -> CliError {
    CliError::Config(format!("{key}: {msg}"))
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut cfg = Self::default();
        let mut section: Option<String> = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim();
                if name.is_empty() || name.contains('.') {
                    return Err(CliError::Config(format!(
                        "line {}: bad section header {line:?}",
                        n + 1
                    )));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!(
                    "line {}: expected key = value, got {line:?}",
                    n + 1
                ))
            })?;
            let section = section.as_deref().ok_or_else(|| {
                CliError::Config(format!("line {}: key outside any [section]", n + 1))
            })?;
            cfg.values.insert(
                format!("{section}.{}", key.trim()),
                value.trim().to_string(),
            );
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::parse(&text)
    }

    /// Apply one `--section.key=value` (leading dashes optional).
    pub fn apply_override(&mut self, arg: &str) -> CliResult<()> {
        let body = arg.trim_start_matches('-');
        let (key, value) = body.split_once('=').ok_or_else(|| {
            CliError::Config(format!(
                "override {arg:?} must look like --section.key=value"
            ))
        })?;
        if !key.contains('.') {
            return Err(CliError::Config(format!(
                "override key {key:?} must be section.key"
            )));
        }
        self.set(key, value);
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), value.into());
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.read
            .lock()
            .expect("config lock")
            .insert(key.to_string());
        self.values.get(key).map(String::as_str)
    }

    fn note(&self, key: &str, value: impl Into<String>) {
        self.resolved
            .lock()
            .expect("config lock")
            .insert(key.to_string(), value.into());
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(s) => {
                self.note(key, s);
                s.parse()
                    .map(Some)
                    .map_err(|e| bad(key, format!("cannot parse {s:?}: {e}")))
            }
        }
    }

    pub fn get_or<T: FromStr + Display>(&self, key: &str, default: T) -> CliResult<T>
    where
        T::Err: Display,
    {
        match self.get(key)? {
            Some(v) => Ok(v),
            None => {
                self.note(key, default.to_string());
                Ok(default)
            }
        }
    }

    /// Parsed value, or `default` parsed the same way.
    pub fn choice<T: FromStr>(&self, key: &str, default: &str) -> CliResult<T>
    where
        T::Err: Display,
    {
        let s = self.raw(key).unwrap_or(default).to_string();
        self.note(key, s.as_str());
        s.parse().map_err(|e| bad(key, e))
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> CliResult<Option<Vec<T>>>
    where
        T::Err: Display,
    {
        let Some(s) = self.raw(key) else {
            return Ok(None);
        };
        self.note(key, s);
        let items = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse()
                    .map_err(|e| bad(key, format!("cannot parse {t:?}: {e}")))
            })
            .collect::<CliResult<Vec<T>>>()?;
        if items.is_empty() {
            return Err(bad(key, "empty list"));
        }
        Ok(Some(items))
    }

    pub fn list_or<T: FromStr + Display + Clone>(
        &self,
        key: &str,
        default: &[T],
    ) -> CliResult<Vec<T>>
    where
        T::Err: Display,
    {
        match self.list(key)? {
            Some(v) => Ok(v),
            None => {
                let joined: Vec<String> = default.iter().map(ToString::to_string).collect();
                self.note(key, joined.join(","));
                Ok(default.to_vec())
            }
        }
    }

    /// Fail on keys present in the configuration that were never read.
    pub fn reject_unknown(&self) -> CliResult<()> {
        let read = self.read.lock().expect("config lock");
        let unknown: Vec<&String> = self.values.keys().filter(|k| !read.contains(*k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            let names: Vec<&str> = unknown.iter().map(|s| s.as_str()).collect();
            Err(CliError::Config(format!(
                "unknown keys: {}",
                names.join(", ")
            )))
        }
    }

    /// Every parameter the run used, defaults included.
    pub fn resolved(&self) -> BTreeMap<String, String> {
        self.resolved.lock().expect("config lock").clone()
    }

    pub fn field_error(key: &str, msg: impl Display) -> CliError {
        bad(key, msg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_lists() {
        let cfg =
            RunConfig::parse("# run\n[model]\nside = 8\n\n[grid]\nbeta = 0.5, 1 ,2\n").unwrap();
        assert_eq!(cfg.get::<usize>("model.side").unwrap(), Some(8));
        assert_eq!(
            cfg.list::<f64>("grid.beta").unwrap(),
            Some(vec![0.5, 1.0, 2.0])
        );
        assert_eq!(cfg.get_or("model.coupling", 1.5).unwrap(), 1.5);
        assert_eq!(
            cfg.resolved().get("model.coupling").map(String::as_str),
            Some("1.5")
        );
        cfg.reject_unknown().unwrap();
    }

    #[test]
    fn overrides_win_and_unknown_keys_fail() {
        let mut cfg = RunConfig::parse("[model]\nside = 8\n").unwrap();
        cfg.apply_override("--model.side=16").unwrap();
        cfg.apply_override("--model.sidee=16").unwrap();
        assert_eq!(cfg.get::<usize>("model.side").unwrap(), Some(16));
        let err = cfg.reject_unknown().unwrap_err();
        assert!(err.to_string().contains("model.sidee"));
        assert!(cfg.apply_override("--side=3").is_err());
    }

    #[test]
    fn errors_name_the_field() {
        let cfg = RunConfig::parse("[chain]\nsweeps = ten\n").unwrap();
        let err = cfg.get::<u64>("chain.sweeps").unwrap_err();
        assert!(err.to_string().contains("chain.sweeps"));
        assert_eq!(err.exit_code(), 2);
        assert!(RunConfig::parse("side = 3\n").is_err());
        assert!(RunConfig::parse("[model]\nside\n").is_err());
    }
}
