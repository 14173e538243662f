//! `key = value` config files. Flags override the file, the file overrides
//! built-in defaults.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::CliError;

#[derive(Debug, Default, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
    /// Everything that was resolved, for the manifest.
    resolved: std::cell::RefCell<BTreeMap<String, String>>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Usage(format!("config line {}: expected `key = value`", no + 1)));
            };
            values.insert(k.trim().replace('-', "_"), v.trim().to_string());
        }
        Ok(Self { values, resolved: Default::default() })
    }

    /// Flag, then config entry, then `default`.
    pub fn pick<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T: FromStr + ToString,
    {
        let v = match flag {
            Some(v) => v,
            None => match self.values.get(key) {
                Some(s) => s.parse().map_err(|_| CliError::Usage(format!("config: cannot parse {key} = {s}")))?,
                None => default,
            },
        };
        self.resolved.borrow_mut().insert(key.into(), v.to_string());
        Ok(v)
    }

    pub fn pick_opt<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr + ToString,
    {
        let v = match flag {
            Some(v) => Some(v),
            None => match self.values.get(key) {
                Some(s) => {
                    Some(s.parse().map_err(|_| CliError::Usage(format!("config: cannot parse {key} = {s}")))?)
                }
                None => None,
            },
        };
        if let Some(v) = &v {
            self.resolved.borrow_mut().insert(key.into(), v.to_string());
        }
        Ok(v)
    }

    pub fn pick_list(&self, flag: Option<List>, key: &str) -> Result<Option<List>, CliError> {
        self.pick_opt(flag, key)
    }

    pub fn record(&self, key: &str, value: impl ToString) {
        self.resolved.borrow_mut().insert(key.into(), value.to_string());
    }

    pub fn resolved(&self) -> BTreeMap<String, String> {
        self.resolved.borrow().clone()
    }
}

/// Comma separated list, e.g. `100,100` or `1,3,10`.
#[derive(Debug, Clone, PartialEq)]
pub struct List(pub Vec<f64>);

impl FromStr for List {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let items: Result<Vec<f64>, _> =
            s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(str::parse).collect();
        items.map(List).map_err(|e| format!("bad list `{s}`: {e}"))
    }
}

impl std::fmt::Display for List {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(f64::to_string).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl List {
    pub fn sizes(&self, what: &str) -> Result<Vec<usize>, CliError> {
        self.0
            .iter()
            .map(|&v| {
                if v >= 1.0 && v.fract() == 0.0 {
                    Ok(v as usize)
                } else {
                    Err(CliError::Usage(format!("{what}: expected positive integers, got {v}")))
                }
            })
            .collect()
    }

    /// One entry per mode; a single entry is repeated.
    pub fn per_mode(&self, order: usize, what: &str) -> Result<Vec<usize>, CliError> {
        let v = self.sizes(what)?;
        match v.len() {
            1 => Ok(vec![v[0]; order]),
            n if n == order => Ok(v),
            n => Err(CliError::Usage(format!("{what}: need 1 or {order} values, got {n}"))),
        }
    }
}
