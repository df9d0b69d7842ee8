//! Key-value config files.
//!
//! One `key = value` pair per line; `#` starts a comment and blank lines are
//! ignored. Keys are the long flag names of the subcommand being run.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Default)]
pub struct ConfigFile {
    source: String,
    values: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
        Self::parse(&path.display().to_string(), &text)
    }

    pub fn parse(source: &str, text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "{source}:{}: expected key = value, got {line:?}",
                    i + 1
                )));
            };
            let key = key.trim().trim_start_matches("--").to_string();
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::Usage(format!("{source}:{}: duplicate key {key:?}", i + 1)));
            }
        }
        Ok(ConfigFile {
            source: source.to_string(),
            values,
            used: RefCell::default(),
        })
    }

    /// Parsed value of `key`, if present.
    pub fn get<T>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        let Some(raw) = self.values.get(key) else {
            return Ok(None);
        };
        self.used.borrow_mut().insert(key.to_string());
        raw.parse()
            .map(Some)
            .map_err(|e| CliError::Usage(format!("{}: invalid value {raw:?} for {key}: {e}", self.source)))
    }

    /// Fails on the first key no lookup asked for.
    pub fn ensure_all_used(&self) -> Result<(), CliError> {
        let used = self.used.borrow();
        match self.values.keys().find(|k| !used.contains(*k)) {
            Some(k) => Err(CliError::Usage(format!(
                "{}: unknown key {k:?} for this subcommand",
                self.source
            ))),
            None => Ok(()),
        }
    }
}

/// Flag value, else config value, else `default`.
pub fn pick<T>(flag: Option<T>, file: &ConfigFile, key: &str, default: T) -> Result<T, CliError>
where
    T: FromStr,
    T::Err: Display,
{
    let from_file = file.get(key)?;
    Ok(flag.or(from_file).unwrap_or(default))
}

/// Comma-separated list of integers, as taken by `--n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntList(pub Vec<i64>);

impl FromStr for IntList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|part| part.trim().parse::<i64>().map_err(|e| format!("{part:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(IntList)
    }
}
