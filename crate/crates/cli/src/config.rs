//! `key = value` configuration files merged under command-line flags.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use serde_json::{Map, Value};

use crate::CliError;

/// Keys understood by at least one subcommand.
const KNOWN_KEYS: &[&str] = &[
    "p", "omega", "m", "j", "k", "delta", "spacing", "r-max", "m-list", "j-range", "method", "t", "dt",
    "init", "init-file", "seed", "burn-in", "format", "out", "profile", "no-cache",
];

#[derive(Debug, Default)]
pub struct Config {
    file: BTreeMap<String, String>,
    echo: Map<String, Value>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut cfg = Config::default();
        let Some(path) = path else { return Ok(cfg) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("{}:{}: expected `key = value`", path.display(), lineno + 1))
            })?;
            let key = key.trim().replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!("{}:{}: unknown key `{key}`", path.display(), lineno + 1)));
            }
            cfg.file.insert(key, value.trim().to_string());
        }
        Ok(cfg)
    }

    fn from_file<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        self.file
            .get(key)
            .map(|s| s.parse::<T>().map_err(|e| CliError::Usage(format!("config key `{key}`: {e}"))))
            .transpose()
    }

    /// Flag, else config file, else `default`; the result is echoed.
    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: Option<T>) -> Result<T, CliError>
    where
        T: FromStr + Clone + Into<Value>,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => v,
            None => match self.from_file(key)? {
                Some(v) => v,
                None => default.ok_or_else(|| CliError::Usage(format!("missing required value --{key}")))?,
            },
        };
        self.echo.insert(key.to_string(), value.clone().into());
        Ok(value)
    }

    /// Like [`Config::get`] for values that may stay unset.
    pub fn get_opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr + Clone + Into<Value>,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => Some(v),
            None => self.from_file(key)?,
        };
        self.echo
            .insert(key.to_string(), value.clone().map_or(Value::Null, Into::into));
        Ok(value)
    }

    /// Boolean switch: set by the flag or by `key = true` in the file.
    pub fn switch(&mut self, key: &str, flag: bool) -> Result<bool, CliError> {
        let on = flag || self.from_file::<bool>(key)?.unwrap_or(false);
        self.echo.insert(key.to_string(), Value::Bool(on));
        Ok(on)
    }

    /// Records a derived value under `key`, replacing any raw echo.
    pub fn record(&mut self, key: &str, value: Value) {
        self.echo.insert(key.to_string(), value);
    }

    pub fn echo(&self) -> Value {
        Value::Object(self.echo.clone())
    }
}

/// Comma-separated unsigned integers.
pub fn parse_list(s: &str) -> Result<Vec<u32>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<u32>().map_err(|e| CliError::Usage(format!("bad list entry `{t}`: {e}"))))
        .collect()
}

/// Comma-separated integers and inclusive ranges `a-b`.
pub fn parse_range(s: &str) -> Result<Vec<i32>, CliError> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let bad = |e: String| CliError::Usage(format!("bad range entry `{item}`: {e}"));
        match item.split_once('-') {
            Some((a, b)) if !a.is_empty() => {
                let a: i32 = a.trim().parse().map_err(|e| bad(format!("{e}")))?;
                let b: i32 = b.trim().parse().map_err(|e| bad(format!("{e}")))?;
                if b < a {
                    return Err(bad("empty range".into()));
                }
                out.extend(a..=b);
            }
            _ => out.push(item.parse().map_err(|e| bad(format!("{e}")))?),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_and_lists() {
        assert_eq!(parse_range("1-4,7").unwrap(), vec![1, 2, 3, 4, 7]);
        assert_eq!(parse_range("-3").unwrap(), vec![-3]);
        assert!(parse_range("5-2").is_err());
        assert_eq!(parse_list("8, 16,32").unwrap(), vec![8, 16, 32]);
        assert!(parse_list("8,x").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.conf");
        std::fs::write(&path, "# comment\np = 2.5\nomega=2 # trailing\nburn_in = 0.4\n").unwrap();
        let mut cfg = Config::load(Some(&path)).unwrap();
        assert_eq!(cfg.get::<f64>("p", Some(3.0), None).unwrap(), 3.0);
        assert_eq!(cfg.get::<f64>("omega", None, None).unwrap(), 2.0);
        assert_eq!(cfg.get::<f64>("burn-in", None, Some(0.3)).unwrap(), 0.4);
        assert!(cfg.get::<u32>("m", None, None).is_err());
        assert_eq!(cfg.echo()["p"], Value::from(3.0));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.conf");
        std::fs::write(&path, "colour = blue\n").unwrap();
        assert!(matches!(Config::load(Some(&path)), Err(CliError::Usage(_))));
    }
}
